#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

namespace taucover {

using Rational = mpq_class;

/// Parses "p", "-p" or "p/q" into a canonical rational. Throws ParseError.
Rational parse_rational(std::string_view text);

/// "p" when the denominator is 1, otherwise "p/q".
std::string to_string(const Rational& r);

/// p/q in lowest terms (mpq_class(p, q) does not reduce).
inline Rational make_rational(long p, long q) {
  Rational r(p, q);
  r.canonicalize();
  return r;
}

inline double to_double(const Rational& r) { return r.get_d(); }

Rational factorial(int k);
Rational binomial(int n, int k);

}  // namespace taucover
