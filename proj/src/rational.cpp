#include "taucover/rational.hpp"

#include <cctype>

#include "taucover/errors.hpp"

namespace taucover {

Rational parse_rational(std::string_view text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  if (s.empty()) throw ParseError("empty rational");
  if (s.front() == '+') s.erase(0, 1);
  std::size_t slash = s.find('/');
  auto digits_ok = [](std::string_view d) {
    if (!d.empty() && d.front() == '-') d.remove_prefix(1);
    if (d.empty()) return false;
    for (char c : d)
      if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    return true;
  };
  std::string num = s.substr(0, slash);
  std::string den = slash == std::string::npos ? "1" : s.substr(slash + 1);
  if (!digits_ok(num) || !digits_ok(den) || den.front() == '-')
    throw ParseError("bad rational '" + std::string(text) + "'");
  mpz_class p(num), q(den);
  if (q == 0) throw ParseError("zero denominator in '" + std::string(text) + "'");
  Rational r(p, q);
  r.canonicalize();
  return r;
}

std::string to_string(const Rational& r) { return r.get_str(); }

Rational factorial(int k) {
  mpz_class f = 1;
  for (int i = 2; i <= k; ++i) f *= i;
  return Rational(f);
}

Rational binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  mpz_class b;
  mpz_bin_uiui(b.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
  return Rational(b);
}

}  // namespace taucover
