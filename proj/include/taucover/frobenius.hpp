#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "taucover/pencil.hpp"
#include "taucover/poly.hpp"

namespace taucover {

/// Linear diagonal Euler field E = sum_a coeffs[a] v^a d/dv^a with
/// E(F) = weight * F up to quadratic terms (weight = 3 - d).
struct EulerData {
  std::vector<Rational> coeffs;
  Rational weight;
};

/// Potential with unit e = d/dv^1.
struct WDVVPotential {
  int n = 1;
  CoeffPoly F{1};
  std::optional<EulerData> euler;
};

struct FrobeniusData {
  int n = 1;
  CoeffPoly F{1};             // terms of degree <= 2 removed
  bool quadratic_dropped = false;
  RatMatrix eta, eta_inv;
  std::vector<std::vector<std::vector<CoeffPoly>>> c;  // c_{abc}
  std::optional<EulerData> euler;

  /// c^a_{bc} = eta^{ad} c_{dbc}
  CoeffPoly c_up(int a, int b, int cc) const;
};

/// Throws NotWDVV naming the violated identity.
FrobeniusData analyze(const WDVVPotential& F);

/// (g1, g2) with g1 = eta^{-1}, g2^{ab} = E^e eta^{am} eta^{bn} c_{emn} and
/// Gamma_2^{ab}_c = ((d + 1)/2 - q_b) c^{ab}_c where E^b = (1 - q_b) v^b.
/// Throws MissingEuler, DegenerateMetric.
std::pair<HydroMetric, HydroMetric> pencil_from_frobenius(const FrobeniusData& d);

/// Result of a Legendre-type transformation, as truncated series around a base point.
struct LegendreData {
  int n = 1;
  int order = 8;
  std::vector<Rational> base;       // v0
  std::vector<Rational> base_hat;   // vhat(v0)
  std::vector<CoeffPoly> vhat_of_v; // vhat^a(v), exact polynomials
  std::vector<CoeffPoly> v_of_vhat; // v^a - v0^a as series in (vhat - vhat0)
  CoeffPoly F_hat{1};               // potential in (vhat - vhat0), truncated at order + 2
  std::vector<Rational> unit;       // e_hat = b^g d/dvhat^g

  /// Point vhat(v).
  Point map(const Point& v) const;
  /// d^2 Fhat / dvhat^a dvhat^b at vhat.
  Matrix hessian_hat(const Point& vhat) const;
};

/// vhat_a = b^g d^2F/dv^g dv^a, vhat^a = eta^{ab} vhat_b, with Fhat rebuilt from
/// its Hessian. Throws NonInvertibleB when the Jacobian is singular at base.
LegendreData legendre_transform(const FrobeniusData& d, const std::vector<Rational>& b,
                                const std::vector<Rational>& base, int order = 8);

/// max |coefficient| of d^3(E(F) - weight F) over all index triples.
double quasihomogeneity_check(const CoeffPoly& F, const std::vector<Rational>& euler, const Rational& weight);

/// psi(i, a) with psi_{i1} = sqrt(f_i) (principal branch) and psi_{ia} = psi_{i1} du^i/dv^a.
CMatrix psi_at(const FrobeniusData& d, const PencilChart& chart);

/// Potentials used throughout the tests and the command line tool.
WDVVPotential kdv_potential();
WDVVPotential a2_potential();
WDVVPotential a3_potential();

}  // namespace taucover
