#pragma once

#include <vector>

#include "taucover/frobenius.hpp"
#include "taucover/jet.hpp"
#include "taucover/report.hpp"

namespace taucover {

/// theta_{a,p}(v) for p = 0..depth, indices zero based.
struct ThetaTable {
  int n = 1;
  int depth = 0;
  RatMatrix eta, eta_inv;
  std::vector<std::vector<CoeffPoly>> theta;  // [a][p]

  const CoeffPoly& operator()(int a, int p) const { return theta[a][p]; }
};

/// h_{a,p}(v) for p = -1..pmax.
struct DensityTable {
  int n = 1;
  int pmax = 0;
  RatMatrix eta, eta_inv;
  std::vector<std::vector<CoeffPoly>> h;  // [a][p + 1]

  const CoeffPoly& operator()(int a, int p) const { return h[a][p + 1]; }
  CoeffPoly& operator()(int a, int p) { return h[a][p + 1]; }
};

/// Omega_{a,p;b,q}(v) for p, q = 0..pmax.
struct OmegaTable {
  int n = 1;
  int pmax = 0;
  RatMatrix eta;
  std::vector<CoeffPoly> omega;

  const CoeffPoly& operator()(int a, int p, int b, int q) const { return omega[index(a, p, b, q)]; }
  CoeffPoly& operator()(int a, int p, int b, int q) { return omega[index(a, p, b, q)]; }
  std::size_t index(int a, int p, int b, int q) const {
    return ((static_cast<std::size_t>(a) * (pmax + 1) + p) * n + b) * (pmax + 1) + q;
  }
};

/// dv^g/dt^{a,p} = eta^{gl} d_x (dh_{a,p}/dv^l), p = 0..pmax.
struct FlowTable {
  int n = 1;
  int pmax = 0;
  std::vector<std::vector<std::vector<DiffPoly>>> rhs;  // [a][p][g]

  const std::vector<DiffPoly>& operator()(int a, int p) const { return rhs[a][p]; }
};

/// theta~_a(z) = theta_b(z) C^b_a(z) + theta^0_a(z).
struct CalibrationChange {
  std::vector<RatMatrix> C;                  // C[0] = 1, C[k] multiplies z^k
  std::vector<std::vector<Rational>> shift;  // shift[a][p], may be empty

  static CalibrationChange identity(int n, int order);
  /// C(z) = exp(z A) truncated at z^order.
  static CalibrationChange exponential(const RatMatrix& A, int order);
};

/// Table to depth 2*pmax + 2, normalized. Throws RecursionInconsistent.
ThetaTable build_theta(const FrobeniusData& d, int pmax);

/// true iff the second-order recursion holds exactly for every entry.
bool check_theta_recursion(const FrobeniusData& d, const ThetaTable& t);

/// N_k(a, b) = sum_{p+q=k} (-1)^q dtheta_{a,p} eta^{-1} dtheta_{b,q} for k = 1..depth.
std::vector<std::vector<std::vector<CoeffPoly>>> normalization_defect(const ThetaTable& t);

/// Cancels normalization defects order by order with C(z) = 1 + A_k z^k;
/// returns the accumulated change. Throws RecursionInconsistent if a defect
/// is not constant.
CalibrationChange normalize_theta(ThetaTable& t);

/// Throws OrthogonalityViolation unless C^T(z) eta C(-z) = eta through the table depth.
ThetaTable apply_calibration_change(const ThetaTable& t, const CalibrationChange& c);

DensityTable build_h(const ThetaTable& t);
FlowTable build_flows(const DensityTable& h);

/// Throws DivisionMismatch when the generating series is not divisible by z1 + z2.
OmegaTable build_omega(const ThetaTable& t);
OmegaTable build_omega(const DensityTable& h);

/// Conditions i)-iii) of a tau structure plus the shape of the divided series.
Report verify_tau_structure(const OmegaTable& omega, const DensityTable& h, const FlowTable& flows);
Report verify_tau_symmetry(const FlowTable& flows, const DensityTable& h, int pmax);
Report verify_commutativity(const FlowTable& flows, int pmax);
/// (a) dOmega/dv^1 identity and (b) [D_Z, d_{b,q}] = d_{b,q-1} on each v^g.
Report galilean_check(const OmegaTable& omega, const FlowTable& flows);
/// flow_{a,p} = D_X(v^g) with X = -[P1, int h_{a,p}], and dv^g/dt^{1,0} = u^{g,1}.
Report verify_hamiltonian_flows(const DensityTable& h, const FlowTable& flows, int pmax);
/// [P2, [P1, int h_{a,p}]] = 0 for p = 0..pmax.
Report verify_bihamiltonian_conservation(const LocalFunctional& P1, const LocalFunctional& P2,
                                         const DensityTable& h, int pmax);

/// Applies a flow table entry as a derivation (chain rule through all jets).
DiffPoly apply_flow(const FlowTable& flows, int a, int p, const DiffPoly& x);

}  // namespace taucover
