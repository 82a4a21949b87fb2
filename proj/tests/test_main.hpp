#pragma once
// Shared helpers for the unit test binaries.

#include <random>

#include "taucover/jet.hpp"

namespace testutil {

/// Random differential polynomial with the given super and standard degree.
/// Coefficients are small rationals; v-dependence up to total degree vdeg.
inline taucover::DiffPoly random_diffpoly(std::mt19937_64& rng, int n, int super, int std_degree, int terms = 3,
                                          int vdeg = 2) {
  using namespace taucover;
  std::uniform_int_distribution<int> coef(-4, 4), den(1, 3), idx(1, n), vd(0, vdeg);
  DiffPoly out(n);
  for (int t = 0; t < terms; ++t) {
    DiffPoly term = DiffPoly::constant(n, make_rational(coef(rng), den(rng)));
    // Split std_degree among up to super odd factors and some even factors.
    int remaining = std_degree;
    for (int k = 0; k < super; ++k) {
      std::uniform_int_distribution<int> ord(0, remaining);
      int s = (k == super - 1 && rng() % 2) ? remaining : ord(rng);
      remaining -= s;
      term = term * DiffPoly::variable(n, theta(idx(rng), s));
    }
    while (remaining > 0) {
      std::uniform_int_distribution<int> ord(1, remaining);
      int s = ord(rng);
      remaining -= s;
      term = term * DiffPoly::variable(n, u(idx(rng), s));
    }
    int d = vd(rng);
    for (int k = 0; k < d; ++k) term = term * DiffPoly::variable(n, v(idx(rng)));
    out += term;
  }
  return out;
}

}  // namespace testutil
