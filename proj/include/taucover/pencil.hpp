#pragma once

#include <complex>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "taucover/jet.hpp"
#include "taucover/poly.hpp"
#include "taucover/taylor.hpp"

namespace taucover {

using Matrix = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;
using Point = std::vector<double>;

/// Contravariant metric g^{ab}(v) with connection coefficients Gamma^{ab}_c(v).
struct HydroMetric {
  int n = 1;
  std::vector<std::vector<CoeffPoly>> g;
  std::vector<std::vector<std::vector<CoeffPoly>>> gamma;  // gamma[a][b][c]

  HydroMetric() : HydroMetric(1) {}
  explicit HydroMetric(int dim);
  /// Constant metric with vanishing connection (flat coordinates).
  static HydroMetric constant(const std::vector<std::vector<Rational>>& g);

  /// Throws NonSymmetricMetric.
  void validate() const;
  Matrix eval(const Point& v) const;
};

/// P = 1/2 int (g^{ij} theta_i theta_j^1 + Gamma^{ij}_k u^{k,1} theta_i theta_j).
LocalFunctional poisson_operator(const HydroMetric& m);

/// Canonical-coordinate data of a semisimple pencil at one point. Derivatives
/// come from truncated Taylor series, so they are exact up to rounding.
struct PencilChart {
  int n = 1;
  Point point;
  std::vector<double> u;       // ascending roots of det(g2 - u g1) = 0
  std::vector<double> f;       // g1^{ii} in canonical coordinates
  std::vector<int> sign;       // sign of f^i; sqrt(f_i) is imaginary when negative
  Matrix du_dv;                // (i, a) = du^i/dv^a
  Matrix dv_du;                // (a, i) = dv^a/du^i
  std::vector<Matrix> d2u_dv2; // [i](a, b)
  Matrix df;                   // (i, k) = d f^i / d u^k
  Matrix df_cov;               // (i, k) = d f_i / d u^k, f_i = 1/f^i
  CMatrix gamma;               // rotation coefficients
  std::vector<CMatrix> dgamma; // [k](i, j) = d gamma_ij / d u^k
  std::map<std::string, double> residuals;
  SpacePtr space;
  std::vector<Series> u_series;   // u^i as series in v - point
  std::vector<Series> dv_series;  // v^a - point^a as series in u - u*
};

/// Throws DegenerateSpectrum, ComplexSpectrum, ZeroDiagonalEntry,
/// DimensionMismatch. `order` is the Taylor truncation used for derivatives.
PencilChart canonical_coordinates_at(const HydroMetric& g1, const HydroMetric& g2, const Point& v, int order = 5);

CMatrix rotation_coefficients(const PencilChart& chart);
/// max |df_i/du^j - df_j/du^i|
double check_egoroff(const PencilChart& chart);

struct GammaSystemResidual {
  double distinct = 0;  // d_k gamma_ij - gamma_ik gamma_jk, distinct i, j, k
  double sum = 0;       // sum_k d_k gamma_ij
  double euler = 0;     // sum_k u^k d_k gamma_ij + gamma_ij
  double max() const { return std::max(distinct, std::max(sum, euler)); }
};
GammaSystemResidual check_gamma_system(const PencilChart& chart);

/// Connectivity of the graph with edges |gamma_ij| > tol.
bool check_irreducible(const PencilChart& chart, double tol = 1e-10);
/// max_i |sum_k d f^i/d u^k|
double check_DZ_f(const PencilChart& chart);

/// Contravariant Christoffels transported to canonical coordinates compared
/// with their diagonal-metric expressions, for g1 and g2 respectively.
struct ChristoffelResidual {
  double first = 0;
  double second = 0;
};
ChristoffelResidual check_christoffel(const PencilChart& chart, const HydroMetric& g1, const HydroMetric& g2);

/// Velocities of the diagonal form u^i_t = A^i(u) u^i_x of v_t = V(v) v_x,
/// as series in u - u*. offdiag is the largest off-diagonal entry of J V J^{-1}
/// at the point, which vanishes when V commutes with the pencil.
struct DiagonalVelocities {
  std::vector<Series> A;
  double offdiag = 0;
};
DiagonalVelocities diagonal_velocities(const PencilChart& chart, const std::vector<std::vector<CoeffPoly>>& V);

/// Maps a point v to a matrix psi(i, alpha) whose columns solve the linear system.
using PsiField = std::function<CMatrix(const Point&)>;

struct PsiResidual {
  double value = 0;
  bool trivial = false;  // every column vanishes at the chart point
};

/// Residual of d psi_j/du^i = gamma_ji psi_i (i != j) and
/// d psi_i/du^i = -sum_{k != i} gamma_ki psi_k for every column, with
/// v-derivatives from Richardson-extrapolated central differences of step h.
PsiResidual psi_residual(const PencilChart& chart, const PsiField& psi, double h = 1e-5);

}  // namespace taucover
