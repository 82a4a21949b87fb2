#include "taucover/poly.hpp"

#include <cmath>
#include <sstream>

#include "taucover/errors.hpp"

namespace taucover {

CoeffPoly CoeffPoly::constant(int n, const Rational& c) {
  CoeffPoly p(n);
  p.add_term(Exponents(n, 0), c);
  return p;
}

CoeffPoly CoeffPoly::variable(int n, int i) {
  Exponents e(n, 0);
  e.at(i) = 1;
  return monomial(n, std::move(e), 1);
}

CoeffPoly CoeffPoly::monomial(int n, Exponents e, const Rational& c) {
  if (static_cast<int>(e.size()) != n) throw DimensionMismatch("exponent vector length");
  CoeffPoly p(n);
  p.add_term(e, c);
  return p;
}

void CoeffPoly::check_dim(const CoeffPoly& o) const {
  if (n_ != o.n_) throw DimensionMismatch("CoeffPoly dimensions " + std::to_string(n_) + " vs " + std::to_string(o.n_));
}

void CoeffPoly::add_term(const Exponents& e, const Rational& c) {
  if (c == 0) return;
  auto [it, inserted] = terms_.try_emplace(e, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0) terms_.erase(it);
  }
}

Rational CoeffPoly::coeff(const Exponents& e) const {
  auto it = terms_.find(e);
  return it == terms_.end() ? Rational(0) : it->second;
}

CoeffPoly& CoeffPoly::operator+=(const CoeffPoly& o) {
  check_dim(o);
  for (const auto& [e, c] : o.terms_) add_term(e, c);
  return *this;
}

CoeffPoly& CoeffPoly::operator-=(const CoeffPoly& o) {
  check_dim(o);
  for (const auto& [e, c] : o.terms_) add_term(e, -c);
  return *this;
}

CoeffPoly& CoeffPoly::operator*=(const Rational& c) {
  if (c == 0) {
    terms_.clear();
    return *this;
  }
  for (auto& [e, x] : terms_) x *= c;
  return *this;
}

CoeffPoly operator*(const CoeffPoly& a, const CoeffPoly& b) {
  a.check_dim(b);
  CoeffPoly r(a.n_);
  CoeffPoly::Exponents e(a.n_);
  for (const auto& [ea, ca] : a.terms_)
    for (const auto& [eb, cb] : b.terms_) {
      for (int i = 0; i < a.n_; ++i) e[i] = ea[i] + eb[i];
      r.add_term(e, ca * cb);
    }
  return r;
}

CoeffPoly CoeffPoly::operator-() const {
  CoeffPoly r = *this;
  for (auto& [e, c] : r.terms_) c = -c;
  return r;
}

CoeffPoly CoeffPoly::derivative(int i) const {
  CoeffPoly r(n_);
  for (const auto& [e, c] : terms_) {
    if (e.at(i) == 0) continue;
    Exponents f = e;
    --f[i];
    r.add_term(f, c * e[i]);
  }
  return r;
}

int CoeffPoly::total_degree() const {
  int d = -1;
  for (const auto& [e, c] : terms_) {
    int s = 0;
    for (int x : e) s += x;
    d = std::max(d, s);
  }
  return d;
}

CoeffPoly CoeffPoly::homogeneous_part(int k) const {
  CoeffPoly r(n_);
  for (const auto& [e, c] : terms_) {
    int s = 0;
    for (int x : e) s += x;
    if (s == k) r.terms_.emplace(e, c);
  }
  return r;
}

CoeffPoly CoeffPoly::without_degree_at_most(int k) const {
  CoeffPoly r(n_);
  for (const auto& [e, c] : terms_) {
    int s = 0;
    for (int x : e) s += x;
    if (s > k) r.terms_.emplace(e, c);
  }
  return r;
}

bool CoeffPoly::is_constant() const {
  return terms_.empty() || (terms_.size() == 1 && total_degree() == 0);
}

Rational CoeffPoly::constant_term() const { return coeff(Exponents(n_, 0)); }

double CoeffPoly::eval(const std::vector<double>& v) const {
  if (static_cast<int>(v.size()) != n_) throw DimensionMismatch("evaluation point");
  double s = 0;
  for (const auto& [e, c] : terms_) {
    double m = c.get_d();
    for (int i = 0; i < n_; ++i)
      for (int k = 0; k < e[i]; ++k) m *= v[i];
    s += m;
  }
  return s;
}

Rational CoeffPoly::eval(const std::vector<Rational>& v) const {
  if (static_cast<int>(v.size()) != n_) throw DimensionMismatch("evaluation point");
  Rational s = 0;
  for (const auto& [e, c] : terms_) {
    Rational m = c;
    for (int i = 0; i < n_; ++i)
      for (int k = 0; k < e[i]; ++k) m *= v[i];
    s += m;
  }
  return s;
}

double CoeffPoly::max_abs_coeff() const {
  double m = 0;
  for (const auto& [e, c] : terms_) m = std::max(m, std::fabs(c.get_d()));
  return m;
}

std::string CoeffPoly::str() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [e, c] : terms_) {
    if (!first) os << " + ";
    first = false;
    os << to_string(c);
    for (int i = 0; i < n_; ++i) {
      if (e[i] == 0) continue;
      os << "*v" << (i + 1);
      if (e[i] > 1) os << "^" << e[i];
    }
  }
  return os.str();
}

CoeffPoly integrate_hessian(const std::vector<std::vector<CoeffPoly>>& hessian) {
  const int n = static_cast<int>(hessian.size());
  CoeffPoly out(n);
  // For a homogeneous part of degree m of the Hessian, the potential part has
  // degree m + 2 and equals v^a v^b H_ab / ((m + 2)(m + 1)).
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const CoeffPoly& h = hessian[a][b];
      for (const auto& [e, c] : h.terms()) {
        int m = 0;
        for (int x : e) m += x;
        CoeffPoly::Exponents f = e;
        ++f[a];
        ++f[b];
        out.add_term(f, c / Rational((m + 2) * (m + 1)));
      }
    }
  return out;
}

CoeffPoly integrate_gradient(const std::vector<CoeffPoly>& grad) {
  const int n = static_cast<int>(grad.size());
  CoeffPoly out(n);
  for (int a = 0; a < n; ++a)
    for (const auto& [e, c] : grad[a].terms()) {
      int m = 0;
      for (int x : e) m += x;
      CoeffPoly::Exponents f = e;
      ++f[a];
      out.add_term(f, c / Rational(m + 1));
    }
  return out;
}

CoeffPoly truncate(const CoeffPoly& p, int max_degree) {
  CoeffPoly r(p.dim());
  for (const auto& [e, c] : p.terms()) {
    int d = 0;
    for (int x : e) d += x;
    if (d <= max_degree) r.add_term(e, c);
  }
  return r;
}

CoeffPoly compose(const CoeffPoly& p, const std::vector<CoeffPoly>& inner, int max_degree) {
  if (static_cast<int>(inner.size()) != p.dim()) throw DimensionMismatch("compose arity");
  const int m = inner.empty() ? 1 : inner.front().dim();
  auto cut = [&](CoeffPoly q) { return max_degree >= 0 ? truncate(q, max_degree) : q; };
  std::vector<std::vector<CoeffPoly>> powers(inner.size());
  for (std::size_t a = 0; a < inner.size(); ++a) powers[a].push_back(CoeffPoly::constant(m, 1));
  CoeffPoly r(m);
  for (const auto& [e, c] : p.terms()) {
    CoeffPoly t = CoeffPoly::constant(m, c);
    for (std::size_t a = 0; a < inner.size(); ++a) {
      while (static_cast<int>(powers[a].size()) <= e[a]) powers[a].push_back(cut(powers[a].back() * inner[a]));
      if (e[a] > 0) t = cut(t * powers[a][e[a]]);
    }
    r += t;
  }
  return r;
}

std::optional<RatMatrix> inverse(const RatMatrix& m) {
  const int n = static_cast<int>(m.size());
  RatMatrix a = m, inv(n, std::vector<Rational>(n, 0));
  for (int i = 0; i < n; ++i) inv[i][i] = 1;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    while (piv < n && a[piv][col] == 0) ++piv;
    if (piv == n) return std::nullopt;
    std::swap(a[piv], a[col]);
    std::swap(inv[piv], inv[col]);
    Rational s = 1 / a[col][col];
    for (int j = 0; j < n; ++j) {
      a[col][j] *= s;
      inv[col][j] *= s;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col || a[r][col] == 0) continue;
      Rational f = a[r][col];
      for (int j = 0; j < n; ++j) {
        a[r][j] -= f * a[col][j];
        inv[r][j] -= f * inv[col][j];
      }
    }
  }
  return inv;
}

CoeffPoly determinant(const std::vector<std::vector<CoeffPoly>>& m) {
  const int n = static_cast<int>(m.size());
  if (n == 0) return CoeffPoly::constant(1, 1);
  if (n == 1) return m[0][0];
  CoeffPoly det(m[0][0].dim());
  for (int j = 0; j < n; ++j) {
    if (m[0][j].is_zero()) continue;
    std::vector<std::vector<CoeffPoly>> minor;
    for (int r = 1; r < n; ++r) {
      std::vector<CoeffPoly> row;
      for (int c = 0; c < n; ++c)
        if (c != j) row.push_back(m[r][c]);
      minor.push_back(row);
    }
    CoeffPoly t = m[0][j] * determinant(minor);
    if (j % 2) det -= t; else det += t;
  }
  return det;
}

}  // namespace taucover
