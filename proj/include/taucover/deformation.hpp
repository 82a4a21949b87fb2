#pragma once

#include <vector>

#include "taucover/hierarchy.hpp"
#include "taucover/jet.hpp"
#include "taucover/pencil.hpp"
#include "taucover/report.hpp"

namespace taucover {

/// A deformation (P~1, {h~_{a,p}}, Z~) of the principal data. Degrees are
/// counted relative to the leading term: densities and Omega keep standard
/// degree <= dmax, vector fields and flows <= 1 + dmax, P~1 <= 1 + dmax.
struct DeformedData {
  int n = 1;
  int pmax = 0;
  int dmax = 0;
  RatMatrix eta, eta_inv;
  LocalFunctional P1;
  LocalFunctional Z;
  std::vector<std::vector<DiffPoly>> h;  // [a][p + 1], p = -1..pmax

  const DiffPoly& operator()(int a, int p) const { return h[a][p + 1]; }
  DiffPoly& operator()(int a, int p) { return h[a][p + 1]; }

  /// Corrections all zero: P1 from eta^{-1}, Z = int theta_1, h from the table.
  static DeformedData trivial(const DensityTable& h, int pmax, int dmax);
};

/// delta Q / delta v^1.
DiffPoly delta_Z(const LocalFunctional& Q);

/// X~_{a,p} = -[P~1, int h~_{a,p}] and its components D_X(v^g), p = -1..pmax.
class DeformedFlows {
 public:
  explicit DeformedFlows(const DeformedData& d);

  const LocalFunctional& field(int a, int p) const { return X_[a][p + 1]; }
  const std::vector<DiffPoly>& components(int a, int p) const { return comp_[a][p + 1]; }
  /// d~_{a,p}(x) truncated at standard degree max_degree.
  DiffPoly apply(int a, int p, const DiffPoly& x, int max_degree) const;

 private:
  int n_ = 1;
  std::vector<std::vector<LocalFunctional>> X_;
  std::vector<std::vector<std::vector<DiffPoly>>> comp_;
};

/// Hamiltonian property of P~1, pairwise Poisson commutativity, tau-symmetry,
/// d~_{1,0} = d, Casimir property of H~_{a,-1} and the Z~ recursion.
Report verify_deformation(const DeformedData& d);

/// Omega~_{a,p;b,q}, p, q = 0..pmax, as differential polynomials.
struct DeformedOmega {
  int n = 1;
  int pmax = 0;
  int dmax = 0;
  std::vector<DiffPoly> omega;

  const DiffPoly& operator()(int a, int p, int b, int q) const { return omega[index(a, p, b, q)]; }
  DiffPoly& operator()(int a, int p, int b, int q) { return omega[index(a, p, b, q)]; }
  std::size_t index(int a, int p, int b, int q) const {
    return ((static_cast<std::size_t>(a) * (pmax + 1) + p) * n + b) * (pmax + 1) + q;
  }
};

/// Integrates d~_{a,p}(h~_{b,q-1}) and pins the degree zero part to omega.
/// Throws NotExact when a cell is not a total derivative.
DeformedOmega build_omega_deformed(const DeformedData& d, const OmegaTable& omega);
/// Symmetry, Omega~_{a,p;1,0} = h~_{a,p-1} and d Omega~ = d~_{a,p}(h~_{b,q-1}).
Report verify_omega_deformed(const DeformedData& d, const DeformedOmega& om);

/// w^a = eta^{ab} h~_{b,-1} and the inverse v^a(w). Both are differential
/// polynomials; in v_of_w the jet variables stand for w.
struct NormalCoordinates {
  int n = 1;
  int dmax = 0;
  std::vector<DiffPoly> w;
  std::vector<DiffPoly> v_of_w;

  /// a(v) rewritten in the w jets, truncated at dmax.
  DiffPoly in_w(const DiffPoly& a) const;
};

NormalCoordinates normal_coordinates(const DeformedData& d);
/// w(v(w)) = w and v(w(v)) = v up to dmax.
Report check_normal_coordinates(const NormalCoordinates& nc);

/// dOmega~/dw^1 = Omega~_{a,p-1;b,q} + Omega~_{a,p;b,q-1} + eta_ab delta_p0 delta_q0
/// with Omega~ written in the w jets, plus D_Z~ w^g = delta^g_1.
Report check_deformed_galilean(const DeformedData& d, const DeformedOmega& om, const NormalCoordinates& nc);

struct EquivalenceShift {
  LocalFunctional K;
  LocalFunctional Y;  // [P1, K]
  DiffPoly g;         // d g = delta_Z K
  DiffPoly G;         // sum_{i >= 1} D_Y^{i-1}(g) / i!
};

struct EquivalenceResult {
  DeformedData hat;  // pmax one less than the input
  EquivalenceShift shift;
  DeformedOmega omega_tilde, omega_hat;
  Report report;
};

/// Builds h^_{a,p} = e^{D_Y} h~_{a,p} + d d^_{a,p+1} G and P^1 = e^{ad_Y} P~1,
/// then checks the density and Omega shift identities against independent
/// constructions. Throws NotExact, NonPositiveDegreeShift.
EquivalenceResult generate_equivalent(const DeformedData& d, const LocalFunctional& K, const OmegaTable& omega);

/// Velocities A^i as series in u - u* around a sample point.
struct VelocitySample {
  std::vector<Series> A;
  double offdiag = 0;  // residual of the diagonalization, when it was computed
};

/// Tsarev's condition for distinct i, j, k at every sample, the flags
/// d_i A^i != 0 and the recorded diagonalization residuals. Throws
/// CoincidingVelocities when A^i = A^j at a sample.
Report check_semi_hamiltonian(const std::vector<VelocitySample>& samples, double tol = 1e-8);

/// Diagonal velocities of the principal flow d/dt^{a,p} at v.
VelocitySample principal_velocities(const PencilChart& chart, const DensityTable& h, int a, int p);

}  // namespace taucover
