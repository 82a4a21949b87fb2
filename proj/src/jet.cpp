#include "taucover/jet.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "taucover/errors.hpp"

namespace taucover {

namespace {

using Mono = DiffPoly::Mono;
using Factor = std::pair<std::uint32_t, std::uint32_t>;  // code, exponent

constexpr std::uint32_t kMaxExponent = 0xffu;

// Sorts factors given in written order into canonical form. Returns the sign of
// the odd reordering, or 0 if an odd factor repeats.
int canonicalize(std::vector<Factor>& f, Mono& out) {
  int sign = 1;
  for (std::size_t i = 1; i < f.size(); ++i) {
    for (std::size_t j = i; j > 0 && f[j - 1].first > f[j].first; --j) {
      if (DiffPoly::is_odd_code(f[j - 1].first) && DiffPoly::is_odd_code(f[j].first)) sign = -sign;
      std::swap(f[j - 1], f[j]);
    }
  }
  out.clear();
  for (const auto& [c, e] : f) {
    if (e == 0) continue;
    if (!out.empty() && DiffPoly::code(out.back()) == c) {
      if (DiffPoly::is_odd_code(c)) return 0;
      std::uint32_t ne = DiffPoly::exponent(out.back()) + e;
      if (ne > kMaxExponent) throw Error("Overflow", "jet exponent exceeds 255");
      out.back() = DiffPoly::pack(c, ne);
    } else {
      if (DiffPoly::is_odd_code(c) && e != 1) return 0;
      out.push_back(DiffPoly::pack(c, e));
    }
  }
  return sign;
}

std::string factor_name(int n, std::uint32_t code) {
  JetVariable x = DiffPoly::variable_of(n, code);
  std::ostringstream os;
  if (x.parity == Parity::Odd)
    os << "t" << x.index << "_" << x.order;
  else if (x.order == 0)
    os << "v" << x.index;
  else
    os << "u" << x.index << "_" << x.order;
  return os.str();
}

}  // namespace

std::uint32_t DiffPoly::code_of(int n, JetVariable x) {
  if (x.index < 1 || x.index > n) throw DimensionMismatch("variable index " + std::to_string(x.index) + " outside 1.." + std::to_string(n));
  if (x.order < 0) throw DimensionMismatch("negative jet order");
  std::uint32_t base = static_cast<std::uint32_t>(x.order * n + (x.index - 1));
  return (base << 1) | static_cast<std::uint32_t>(x.parity);
}

JetVariable DiffPoly::variable_of(int n, std::uint32_t code) {
  JetVariable x;
  x.parity = is_odd_code(code) ? Parity::Odd : Parity::Even;
  int base = static_cast<int>(code >> 1);
  x.order = base / n;
  x.index = base % n + 1;
  return x;
}

DiffPoly DiffPoly::constant(int n, const Rational& c) {
  DiffPoly p(n);
  p.add_term({}, c);
  return p;
}

DiffPoly DiffPoly::variable(int n, JetVariable x) {
  DiffPoly p(n);
  p.add_term({pack(code_of(n, x), 1)}, 1);
  return p;
}

DiffPoly DiffPoly::from_coeff(const CoeffPoly& q) {
  const int n = q.dim();
  DiffPoly p(n);
  for (const auto& [e, c] : q.terms()) {
    Mono m;
    for (int i = 0; i < n; ++i)
      if (e[i] > 0) {
        if (e[i] > static_cast<int>(kMaxExponent)) throw Error("Overflow", "exponent exceeds 255");
        m.push_back(pack(code_of(n, v(i + 1)), static_cast<std::uint32_t>(e[i])));
      }
    p.add_term(m, c);
  }
  return p;
}

void DiffPoly::add_term(const Mono& m, const Rational& c) {
  if (c == 0) return;
  auto [it, inserted] = terms_.try_emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0) terms_.erase(it);
  }
}

DiffPoly& DiffPoly::operator+=(const DiffPoly& o) {
  if (n_ != o.n_) throw DimensionMismatch("DiffPoly dimensions");
  for (const auto& [m, c] : o.terms_) add_term(m, c);
  return *this;
}

DiffPoly& DiffPoly::operator-=(const DiffPoly& o) {
  if (n_ != o.n_) throw DimensionMismatch("DiffPoly dimensions");
  for (const auto& [m, c] : o.terms_) add_term(m, -c);
  return *this;
}

DiffPoly& DiffPoly::operator*=(const Rational& c) {
  if (c == 0) {
    terms_.clear();
    return *this;
  }
  for (auto& [m, x] : terms_) x *= c;
  return *this;
}

DiffPoly DiffPoly::operator-() const {
  DiffPoly r = *this;
  for (auto& [m, c] : r.terms_) c = -c;
  return r;
}

int multiply_monomials(const Mono& a, const Mono& b, Mono& out) {
  out.clear();
  out.reserve(a.size() + b.size());
  int odd_left_in_a = 0;
  for (auto f : a)
    if (DiffPoly::is_odd_code(DiffPoly::code(f))) ++odd_left_in_a;
  int sign = 1;
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && DiffPoly::code(a[i]) < DiffPoly::code(b[j]))) {
      if (DiffPoly::is_odd_code(DiffPoly::code(a[i]))) --odd_left_in_a;
      out.push_back(a[i++]);
    } else if (i == a.size() || DiffPoly::code(b[j]) < DiffPoly::code(a[i])) {
      // b[j] moves past every odd factor of a that is still to come.
      if (DiffPoly::is_odd_code(DiffPoly::code(b[j])) && (odd_left_in_a & 1)) sign = -sign;
      out.push_back(b[j++]);
    } else {
      std::uint32_t c = DiffPoly::code(a[i]);
      if (DiffPoly::is_odd_code(c)) return 0;
      std::uint32_t e = DiffPoly::exponent(a[i]) + DiffPoly::exponent(b[j]);
      if (e > kMaxExponent) throw Error("Overflow", "jet exponent exceeds 255");
      out.push_back(DiffPoly::pack(c, e));
      ++i;
      ++j;
    }
  }
  return sign;
}

DiffPoly operator*(const DiffPoly& a, const DiffPoly& b) {
  if (a.n_ != b.n_) throw DimensionMismatch("DiffPoly dimensions");
  DiffPoly r(a.n_);
  Mono m;
  for (const auto& [ma, ca] : a.terms_)
    for (const auto& [mb, cb] : b.terms_) {
      int s = multiply_monomials(ma, mb, m);
      if (s == 0) continue;
      Rational c = ca * cb;
      if (s < 0) c = -c;
      r.add_term(m, c);
    }
  return r;
}

std::string DiffPoly::str() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [m, c] : terms_) {
    if (!first) os << " + ";
    first = false;
    os << to_string(c);
    for (auto f : m) {
      os << "*" << factor_name(n_, code(f));
      if (exponent(f) > 1) os << "^" << exponent(f);
    }
  }
  return os.str();
}

DiffPoly DiffPoly::parse(int n, std::string_view text) {
  std::string s;
  for (char ch : text)
    if (!std::isspace(static_cast<unsigned char>(ch))) s.push_back(ch);
  DiffPoly result(n);
  if (s.empty() || s == "0") return result;
  std::size_t pos = 0;
  auto fail = [&](const std::string& why) {
    throw ParseError(why + " at position " + std::to_string(pos) + " in '" + std::string(text) + "'");
  };
  auto read_int = [&]() {
    std::size_t start = pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    if (start == pos) fail("expected integer");
    return std::stoi(s.substr(start, pos - start));
  };
  while (pos < s.size()) {
    int sign = 1;
    while (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
      if (s[pos] == '-') sign = -sign;
      ++pos;
    }
    Rational coeff = sign;
    std::vector<Factor> factors;
    bool expect_factor = true;
    while (expect_factor) {
      if (pos >= s.size()) fail("unexpected end");
      char ch = s[pos];
      if (std::isdigit(static_cast<unsigned char>(ch))) {
        std::size_t start = pos;
        while (pos < s.size() && (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '/')) ++pos;
        coeff *= parse_rational(s.substr(start, pos - start));
      } else if (ch == 'v' || ch == 'u' || ch == 't') {
        ++pos;
        int idx = read_int();
        int ord = 0;
        if (ch != 'v') {
          if (pos >= s.size() || s[pos] != '_') fail("expected '_'");
          ++pos;
          ord = read_int();
        }
        int e = 1;
        if (pos < s.size() && s[pos] == '^') {
          ++pos;
          e = read_int();
        }
        JetVariable x{ch == 't' ? Parity::Odd : Parity::Even, idx, ord};
        for (int k = 0; k < e; ++k) factors.emplace_back(code_of(n, x), 1);
      } else {
        fail("unexpected character");
      }
      if (pos < s.size() && s[pos] == '*') {
        ++pos;
      } else {
        expect_factor = false;
      }
    }
    if (pos < s.size() && s[pos] != '+' && s[pos] != '-') fail("expected '+' or '-'");
    Mono m;
    int sg = canonicalize(factors, m);
    if (sg == 0) continue;
    result.add_term(m, sg > 0 ? coeff : Rational(-coeff));
  }
  return result;
}

int standard_degree(const DiffPoly& a, const Mono& m) {
  int d = 0;
  for (auto f : m) d += a.order_of_code(DiffPoly::code(f)) * static_cast<int>(DiffPoly::exponent(f));
  return d;
}

int super_degree(const Mono& m) {
  int d = 0;
  for (auto f : m)
    if (DiffPoly::is_odd_code(DiffPoly::code(f))) ++d;
  return d;
}

DegreeInfo degree(const DiffPoly& a, DegreeKind kind) {
  DegreeInfo info;
  bool first = true;
  for (const auto& [m, c] : a.terms()) {
    int d = kind == DegreeKind::Standard ? standard_degree(a, m) : super_degree(m);
    if (first) {
      info.status = DegreeInfo::Status::Homogeneous;
      info.value = d;
      first = false;
    } else if (d != info.value) {
      info.status = DegreeInfo::Status::Inhomogeneous;
      return info;
    }
  }
  return info;
}

DiffPoly total_derivative(const DiffPoly& a) {
  const int n = a.dim();
  const std::uint32_t shift = static_cast<std::uint32_t>(2 * n);
  DiffPoly r(n);
  std::vector<Factor> f;
  Mono out;
  for (const auto& [m, c] : a.terms()) {
    for (std::size_t k = 0; k < m.size(); ++k) {
      std::uint32_t code = DiffPoly::code(m[k]);
      std::uint32_t e = DiffPoly::exponent(m[k]);
      f.clear();
      for (std::size_t l = 0; l < m.size(); ++l) {
        if (l == k) {
          if (e > 1) f.emplace_back(code, e - 1);
          f.emplace_back(code + shift, 1);  // written in place of the old factor
        } else {
          f.emplace_back(DiffPoly::code(m[l]), DiffPoly::exponent(m[l]));
        }
      }
      int s = canonicalize(f, out);
      if (s == 0) continue;
      Rational x = c * e;
      if (s < 0) x = -x;
      r.add_term(out, x);
    }
  }
  return r;
}

DiffPoly total_derivative(const DiffPoly& a, int times) {
  DiffPoly r = a;
  for (int k = 0; k < times; ++k) r = total_derivative(r);
  return r;
}

DiffPoly partial(const DiffPoly& a, JetVariable x) {
  const int n = a.dim();
  const std::uint32_t target = DiffPoly::code_of(n, x);
  DiffPoly r(n);
  Mono out;
  for (const auto& [m, c] : a.terms()) {
    int odd_before = 0;
    for (std::size_t k = 0; k < m.size(); ++k) {
      std::uint32_t code = DiffPoly::code(m[k]);
      if (code == target) {
        std::uint32_t e = DiffPoly::exponent(m[k]);
        out.assign(m.begin(), m.end());
        if (e > 1)
          out[k] = DiffPoly::pack(code, e - 1);
        else
          out.erase(out.begin() + static_cast<std::ptrdiff_t>(k));
        Rational y = c * e;
        if (DiffPoly::is_odd_code(code) && (odd_before & 1)) y = -y;
        r.add_term(out, y);
        break;
      }
      if (code > target) break;
      if (DiffPoly::is_odd_code(code)) ++odd_before;
    }
  }
  return r;
}

int max_order(const DiffPoly& a, int index, Parity parity) {
  int best = -1;
  for (const auto& [m, c] : a.terms())
    for (auto f : m) {
      JetVariable x = DiffPoly::variable_of(a.dim(), DiffPoly::code(f));
      if (x.index == index && x.parity == parity) best = std::max(best, x.order);
    }
  return best;
}

DiffPoly variational_derivative(const DiffPoly& a, int index, Parity parity) {
  const int n = a.dim();
  int top = max_order(a, index, parity);
  DiffPoly r(n);
  // Horner scheme: sum_s (-d)^s P_s = P_0 - d(P_1 - d(P_2 - ...)).
  for (int s = top; s >= 0; --s) {
    DiffPoly ps = partial(a, JetVariable{parity, index, s});
    r = ps - total_derivative(r);
  }
  return r;
}

bool is_exact(const DiffPoly& a) {
  for (const auto& [m, c] : a.terms())
    if (m.empty()) return false;
  for (int i = 1; i <= a.dim(); ++i)
    for (Parity p : {Parity::Even, Parity::Odd})
      if (!variational_derivative(a, i, p).is_zero()) return false;
  return true;
}

namespace {

// Greedy integration by parts. Terms whose highest variable w = y' (order >= 1)
// occurs linearly and whose other factors are all <= y are removed by
// subtracting d(G); G accumulates in primitive. Returns the irreducible rest.
DiffPoly reduce(const DiffPoly& a, DiffPoly* primitive) {
  const int n = a.dim();
  const std::uint32_t shift = static_cast<std::uint32_t>(2 * n);
  DiffPoly rem = a;
  auto reducible_top = [&](const Mono& m) -> std::int64_t {
    if (m.empty()) return -1;
    std::uint32_t w = DiffPoly::code(m.back());
    if (w < shift) return -1;
    if (DiffPoly::exponent(m.back()) != 1) return -1;
    std::uint32_t y = w - shift;
    if (m.size() >= 2) {
      std::uint32_t below = DiffPoly::code(m[m.size() - 2]);
      if (below > y) return -1;
      if (below == y && DiffPoly::is_odd_code(y)) return -1;
    }
    return static_cast<std::int64_t>(w);
  };
  while (true) {
    std::int64_t best = -1;
    for (const auto& [m, c] : rem.terms()) best = std::max(best, reducible_top(m));
    if (best < 0) break;
    const std::uint32_t w = static_cast<std::uint32_t>(best);
    const std::uint32_t y = w - shift;
    DiffPoly g(n);
    Mono gm;
    for (const auto& [m, c] : rem.terms()) {
      if (reducible_top(m) != best) continue;
      gm.assign(m.begin(), m.end() - 1);
      if (DiffPoly::is_odd_code(y)) {
        gm.push_back(DiffPoly::pack(y, 1));
        g.add_term(gm, c);
      } else if (!gm.empty() && DiffPoly::code(gm.back()) == y) {
        std::uint32_t e = DiffPoly::exponent(gm.back()) + 1;
        if (e > 0xffu) throw Error("Overflow", "jet exponent exceeds 255");
        gm.back() = DiffPoly::pack(y, e);
        g.add_term(gm, c / Rational(e));
      } else {
        gm.push_back(DiffPoly::pack(y, 1));
        g.add_term(gm, c);
      }
    }
    rem -= total_derivative(g);
    if (primitive) *primitive += g;
  }
  return rem;
}

}  // namespace

DiffPoly integrate(const DiffPoly& a) {
  DiffPoly g(a.dim());
  DiffPoly rest = reduce(a, &g);
  if (!rest.is_zero()) throw NotExact("not a total derivative; irreducible remainder " + rest.str());
  return g;
}

DiffPoly normal_form(const DiffPoly& a) { return reduce(a, nullptr); }

DiffPoly truncate(const DiffPoly& a, int max_degree) {
  DiffPoly r(a.dim());
  for (const auto& [m, c] : a.terms())
    if (standard_degree(a, m) <= max_degree) r.add_term(m, c);
  return r;
}

DiffPoly homogeneous_component(const DiffPoly& a, int std_degree) {
  DiffPoly r(a.dim());
  for (const auto& [m, c] : a.terms())
    if (standard_degree(a, m) == std_degree) r.add_term(m, c);
  return r;
}

bool is_function_of_v(const DiffPoly& a) {
  const std::uint32_t shift = static_cast<std::uint32_t>(2 * a.dim());
  for (const auto& [m, c] : a.terms())
    for (auto f : m) {
      std::uint32_t code = DiffPoly::code(f);
      if (code >= shift || DiffPoly::is_odd_code(code)) return false;
    }
  return true;
}

CoeffPoly to_coeff(const DiffPoly& a) {
  if (!is_function_of_v(a)) throw Error("NotAFunctionOfV", a.str());
  const int n = a.dim();
  CoeffPoly p(n);
  for (const auto& [m, c] : a.terms()) {
    CoeffPoly::Exponents e(n, 0);
    for (auto f : m) e[DiffPoly::variable_of(n, DiffPoly::code(f)).index - 1] = static_cast<int>(DiffPoly::exponent(f));
    p.add_term(e, c);
  }
  return p;
}

DiffPoly substitute(const DiffPoly& a, const std::vector<DiffPoly>& subs, int max_degree) {
  const int n = a.dim();
  if (static_cast<int>(subs.size()) != n) throw DimensionMismatch("substitution size");
  // Cache of d^s(subs[i]) truncated.
  std::map<std::uint32_t, DiffPoly> image;
  auto image_of = [&](std::uint32_t code) -> const DiffPoly& {
    auto it = image.find(code);
    if (it != image.end()) return it->second;
    JetVariable x = DiffPoly::variable_of(n, code);
    DiffPoly e(n);
    if (x.parity == Parity::Odd) {
      e = DiffPoly::variable(n, x);
    } else {
      e = truncate(subs[x.index - 1], max_degree);
      for (int s = 0; s < x.order; ++s) e = truncate(total_derivative(e), max_degree);
    }
    return image.emplace(code, std::move(e)).first->second;
  };
  DiffPoly r(n);
  for (const auto& [m, c] : a.terms()) {
    DiffPoly t = DiffPoly::constant(n, c);
    for (auto f : m) {
      const DiffPoly& e = image_of(DiffPoly::code(f));
      for (std::uint32_t k = 0; k < DiffPoly::exponent(f); ++k) t = truncate(t * e, max_degree);
      if (t.is_zero()) break;
    }
    r += t;
  }
  return r;
}

std::optional<int> LocalFunctional::super_degree() const {
  DegreeInfo d = degree(rep_, DegreeKind::Super);
  if (d.status == DegreeInfo::Status::Zero) return std::nullopt;
  if (d.status == DegreeInfo::Status::Inhomogeneous) throw InhomogeneousSuperDegree(rep_.str());
  return d.value;
}

}  // namespace taucover
