#include "taucover/taylor.hpp"

#include <cmath>
#include <stdexcept>

namespace taucover {

namespace {

void enumerate(int vars, int total, std::vector<int>& cur, int pos, std::vector<std::vector<int>>& out) {
  if (pos == vars - 1) {
    cur[pos] = total;
    out.push_back(cur);
    return;
  }
  for (int k = total; k >= 0; --k) {
    cur[pos] = k;
    enumerate(vars, total - k, cur, pos + 1, out);
  }
}

double factorial(int k) {
  double f = 1;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

}  // namespace

SeriesSpace::SeriesSpace(int vars, int order) : vars_(vars), order_(order) {
  std::vector<int> cur(vars, 0);
  for (int d = 0; d <= order; ++d) {
    std::size_t before = exps_.size();
    enumerate(vars, d, cur, 0, exps_);
    deg_.resize(exps_.size(), d);
    (void)before;
  }
  std::vector<int> e(vars);
  for (int a = 0; a < size(); ++a)
    for (int b = 0; b < size(); ++b) {
      if (deg_[a] + deg_[b] > order) continue;
      for (int i = 0; i < vars; ++i) e[i] = exps_[a][i] + exps_[b][i];
      prod_.push_back({a, b, index(e), deg_[a] + deg_[b]});
    }
}

int SeriesSpace::index(const std::vector<int>& e) const {
  int d = 0;
  for (int x : e) d += x;
  if (d > order_) return -1;
  // Monomials of degree d start after all lower degrees; linear scan within
  // the degree block keeps this simple for the small spaces used here.
  for (int k = 0; k < size(); ++k)
    if (deg_[k] == d && exps_[k] == e) return k;
  return -1;
}

Series::Series(SpacePtr sp, int valid) : sp_(std::move(sp)), valid_(valid), c_(sp_->size(), 0.0) {}

Series Series::constant(SpacePtr sp, double c) {
  int order = sp->order();
  Series s(std::move(sp), order);
  s.c_[0] = c;
  return s;
}

Series Series::variable(SpacePtr sp, int i, double x0) {
  Series s = constant(sp, x0);
  std::vector<int> e(sp->vars(), 0);
  e[i] = 1;
  if (sp->order() >= 1) s.c_[sp->index(e)] = 1.0;
  return s;
}

double Series::coeff(const std::vector<int>& e) const {
  int k = sp_->index(e);
  return k < 0 ? 0.0 : c_[k];
}

double Series::derivative_at_origin(const std::vector<int>& e) const {
  double f = 1;
  for (int x : e) f *= factorial(x);
  return coeff(e) * f;
}

Series& Series::operator+=(const Series& o) {
  if (c_.empty()) return *this = o;
  for (std::size_t k = 0; k < c_.size(); ++k) c_[k] += o.c_[k];
  valid_ = std::min(valid_, o.valid_);
  return *this;
}

Series& Series::operator-=(const Series& o) {
  if (c_.empty()) return *this = -o;
  for (std::size_t k = 0; k < c_.size(); ++k) c_[k] -= o.c_[k];
  valid_ = std::min(valid_, o.valid_);
  return *this;
}

Series& Series::operator*=(double s) {
  for (double& x : c_) x *= s;
  return *this;
}

Series Series::operator+(double s) const {
  Series r = *this;
  r.c_[0] += s;
  return r;
}

Series operator*(const Series& a, const Series& b) {
  int valid = std::min(a.valid_, b.valid_);
  Series r(a.sp_, valid);
  for (const auto& p : a.sp_->products())
    if (p.deg <= valid) r.c_[p.c] += a.c_[p.a] * b.c_[p.b];
  return r;
}

Series Series::pow(double r) const {
  double a0 = c_[0];
  if (!(a0 > 0) && std::floor(r) != r) throw std::domain_error("series power of non-positive constant term");
  // a = a0 (1 + t), t without constant term: a^r = a0^r sum_k C(r,k) t^k.
  Series t = *this * (1.0 / a0);
  t.c_[0] = 0.0;
  Series sum = constant(sp_, 1.0);
  sum.valid_ = valid_;
  Series tk = sum;
  double binom = 1.0;
  for (int k = 1; k <= valid_; ++k) {
    tk = tk * t;
    binom *= (r - (k - 1)) / k;
    sum += tk * binom;
  }
  sum *= std::pow(a0, r);
  return sum;
}

Series Series::inverse() const {
  double a0 = c_[0];
  if (a0 == 0.0) throw std::domain_error("series inverse of zero constant term");
  Series t = *this * (1.0 / a0);
  t.c_[0] = 0.0;
  // 1/(1+t) = sum (-t)^k
  Series sum = constant(sp_, 1.0);
  sum.valid_ = valid_;
  Series tk = sum;
  for (int k = 1; k <= valid_; ++k) {
    tk = tk * t * -1.0;
    sum += tk;
  }
  return sum * (1.0 / a0);
}

Series Series::derivative(int i) const {
  Series r(sp_, std::max(valid_ - 1, 0));
  std::vector<int> e;
  for (int k = 0; k < sp_->size(); ++k) {
    e = sp_->exponents(k);
    if (e[i] == 0) continue;
    double f = e[i];
    --e[i];
    int j = sp_->index(e);
    r.c_[j] += f * c_[k];
  }
  if (valid_ == 0) r.valid_ = -1;
  return r;
}

Series Series::compose(const std::vector<Series>& inner) const {
  if (static_cast<int>(inner.size()) != sp_->vars()) throw std::invalid_argument("compose: arity");
  const SpacePtr& tsp = inner.front().space();
  int valid = valid_;
  for (const auto& s : inner) valid = std::min(valid, s.valid());
  // powers[i][k] = inner_i^k
  std::vector<std::vector<Series>> powers(inner.size());
  for (std::size_t i = 0; i < inner.size(); ++i) {
    powers[i].push_back(constant(tsp, 1.0));
    for (int k = 1; k <= sp_->order(); ++k) powers[i].push_back(powers[i].back() * inner[i]);
  }
  Series r(tsp, valid);
  for (int k = 0; k < sp_->size(); ++k) {
    if (c_[k] == 0.0 || sp_->degree(k) > valid) continue;
    Series term = constant(tsp, c_[k]);
    const auto& e = sp_->exponents(k);
    for (std::size_t i = 0; i < inner.size(); ++i)
      if (e[i] > 0) term = term * powers[i][e[i]];
    r += term;
  }
  r.valid_ = valid;
  return r;
}

std::vector<std::vector<Series>> solve(std::vector<std::vector<Series>> A, std::vector<std::vector<Series>> B) {
  const int n = static_cast<int>(A.size());
  const int m = n ? static_cast<int>(B.front().size()) : 0;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::fabs(A[r][col].value()) > std::fabs(A[piv][col].value())) piv = r;
    if (A[piv][col].value() == 0.0) throw std::domain_error("singular series system");
    std::swap(A[piv], A[col]);
    std::swap(B[piv], B[col]);
    Series inv = A[col][col].inverse();
    for (int c = col; c < n; ++c) A[col][c] = A[col][c] * inv;
    for (int c = 0; c < m; ++c) B[col][c] = B[col][c] * inv;
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      Series f = A[r][col];
      for (int c = col; c < n; ++c) A[r][c] -= f * A[col][c];
      for (int c = 0; c < m; ++c) B[r][c] -= f * B[col][c];
    }
  }
  return B;
}

}  // namespace taucover
