#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "taucover/hierarchy.hpp"
#include "taucover/report.hpp"

namespace taucover {

/// Initial profile v0(x) together with its derivative.
struct Profile {
  enum class Kind { Polynomial, Sine, Custom };
  Kind kind = Kind::Polynomial;
  std::vector<double> coeffs;  // ascending, Polynomial
  double mean = 0, amplitude = 0, wavenumber = 1;  // mean + amplitude sin(wavenumber x)
  std::function<double(double)> f, df;
  std::string label;

  static Profile polynomial(std::vector<double> c);
  static Profile constant(double c) { return polynomial({c}); }
  static Profile sine(double mean, double amplitude, double wavenumber = 1);
  static Profile custom(std::function<double(double)> f, std::function<double(double)> df, std::string label);

  double value(double x) const;
  double slope(double x) const;
  /// v0 + s
  Profile shifted(double s) const;
  std::string describe() const;
};

/// v_t = A(v) v_x with A = d^2 h_{1,p}/dv^2 and v(x, 0) = v0(x).
struct ScalarICProblem {
  Profile v0;
  int p = 1;
  double x0 = 0, x1 = 1;
  int nx = 2;
  double t1 = 0;  // time grid runs from 0
  int nt = 1;
  /// Periodic grids omit the right end point; otherwise both ends are nodes.
  bool periodic = false;
};

struct SolveOptions {
  double tol = 1e-14;
  int max_iter = 60;
  /// Keep the rows before breaking instead of throwing BreakingDetected.
  bool truncate_on_breaking = false;
};

struct ScalarField {
  ScalarICProblem problem;
  std::vector<double> A;  // coefficients of A(v), ascending
  std::vector<double> x, t;
  std::vector<double> v;   // v[it * nx + ix]
  std::vector<double> xi;  // characteristic feet
  bool broken = false;
  double last_valid_t = 0;
  double breaking_time = std::numeric_limits<double>::infinity();

  std::size_t nx() const { return x.size(); }
  std::size_t nt() const { return t.size(); }
  double at(std::size_t it, std::size_t ix) const { return v[it * x.size() + ix]; }
};

/// Coefficients of a one-variable polynomial in double precision.
std::vector<double> coefficients(const CoeffPoly& p);
/// A(v) = h''_{1,p}(v). Throws DimensionMismatch unless n = 1.
std::vector<double> flow_speed(const DensityTable& h, int p);

/// 1 / max(v0'(xi) A'(v0(xi))) over the sampled feet; infinity if the
/// profile never steepens.
double breaking_time(const Profile& v0, const std::vector<double>& A, double x0, double x1, int samples = 4096);

/// Newton solve of v = v0(x + A(v) t) from the guess. Returns false if the
/// iteration fails or the denominator 1 - v0' A' t is not positive.
bool characteristic_value(const Profile& v0, const std::vector<double>& A, double x, double t, double& v,
                          const SolveOptions& opt = {});

/// Throws BreakingDetected (message carries the last valid time) unless
/// truncate_on_breaking is set.
ScalarField solve_characteristics(const ScalarICProblem& prob, const DensityTable& h, const SolveOptions& opt = {});

/// Tau cover on the grid with x = t^{1,0}, t = t^{1,p}:
/// f_x = f_{1,0}, f_t = f_{1,p}, d_x f_{1,q} = Omega_{0,q}, d_t f_{1,q} = Omega_{p,q}.
/// Values vanish at (x0, 0).
struct TauGrid {
  int p = 1;
  int qmax = 1;
  std::vector<double> x, t;
  // Route X: t-integration along x0, then x-integration along each row.
  std::vector<double> f;
  std::vector<std::vector<double>> fq;  // [q][it * nx + ix]
  // Route T: x-integration along t = 0, then t-integration along each column.
  std::vector<double> f_t;
  std::vector<std::vector<double>> fq_t;
  double route_discrepancy = 0;

  /// Largest fourth-order central-difference residual per relation; zero
  /// where the grid has fewer than five nodes in that direction.
  struct Residuals {
    double fx = 0, ft = 0, fqx = 0, fqt = 0, mixed = 0;
    bool empty = true;
  } residuals;
  std::vector<double> node_residual;  // max residual at each node, 0 off the stencil

  std::size_t nx() const { return x.size(); }
  std::size_t nt() const { return t.size(); }
};

/// qmax < 0 means max(p, 1). Needs omega.pmax >= max(p, qmax).
TauGrid evaluate_tau(const ScalarField& field, const OmegaTable& omega, int qmax = -1);

/// Cumulative composite Simpson integral of samples with spacing h, with a
/// fourth-order closure on odd panels.
std::vector<double> cumulative_simpson(const std::vector<double>& f, double h);

struct ConservationResult {
  int q = 0;
  std::vector<double> integral;  // per time row
  double drift = 0;              // max |I(t) - I(0)|
};

/// int h_{1,q}(v) dx over the periodic window, by the periodic trapezoid rule.
ConservationResult check_conservation(const ScalarField& field, const DensityTable& h, int q);

/// d/dx on the grid: spectral (FFTW) when periodic, else fourth-order
/// differences with one-sided closures.
std::vector<double> grid_derivative(const std::vector<double>& u, double dx, bool periodic);

struct GalileanShiftResult {
  double s_step = 0;
  std::size_t row = 0;
  double euler_discrepancy = 0;  // one step vs re-solving from v0 + s
  double rk4_discrepancy = 0;
  std::vector<double> euler_errors;  // one Euler step of s, s/2, s/4 vs a fine RK4 run
  std::vector<double> rk4_errors;    // 1, 2, 4, 8 RK4 steps vs 64 steps
  double euler_slope = 0, rk4_slope = 0;
  Report report;
};

/// Advances (v, f, f_{1,q}) at the time row by the s-flow of the Galilean
/// symmetry and compares with the tau cover of the solution from v0 + s, up
/// to integration constants (affine in x for f, constant for f_{1,q}).
/// row < 0 means the last row. Needs p >= 1.
GalileanShiftResult galilean_shift_check(const ScalarField& field, const TauGrid& tau, const DensityTable& h,
                                         const OmegaTable& omega, double s_step, int row = -1, double tol = 1e-6);

}  // namespace taucover
