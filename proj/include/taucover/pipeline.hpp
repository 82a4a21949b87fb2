#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "taucover/deformation.hpp"
#include "taucover/frobenius.hpp"
#include "taucover/hierarchy.hpp"
#include "taucover/io.hpp"
#include "taucover/report.hpp"
#include "taucover/solver.hpp"

namespace taucover {

/// Principal hierarchy data of one potential.
/// Tables are built to the depth the Omega table of order pmax needs, so h
/// and the flows extend beyond pmax.
struct Principal {
  std::string name;
  int pmax = 0;
  WDVVPotential potential;
  FrobeniusData frob;
  ThetaTable theta;
  DensityTable h;
  FlowTable flows;
  OmegaTable omega;
};

/// Throws NotWDVV, RecursionInconsistent, DivisionMismatch.
Principal build_principal(const std::string& name, const WDVVPotential& pot, int pmax);

/// Copy of r with every record name prefixed by "prefix.".
Report prefixed(const Report& r, const std::string& prefix);

/// Random differential polynomial of the given super and standard degree
/// with small rational coefficients.
DiffPoly random_diffpoly(std::mt19937_64& rng, int n, int super, int std_degree, int terms = 3, int vdeg = 2);

/// Perturbation targets accepted by --fuzz.
const std::vector<std::string>& fuzz_targets();
bool is_deformation_fuzz(const std::string& target);
/// Adds a seeded nonzero monomial to one cell of h or omega; flows are
/// rebuilt from the perturbed h. Returns a description of the change.
std::string fuzz_principal(Principal& b, const std::string& target, std::uint64_t seed);

/// Theta recursion, tau structure, tau symmetry, commutativity, Hamiltonian
/// form of the flows and the Galilean identities.
Report check_principal(const Principal& b);

/// Sample points with a real, simple spectrum, or the explicit points.
std::vector<Point> sample_points(const Principal& b, const SampleSpec& s);

/// Exact bihamiltonian and exactness tests, their pointwise residuals, and
/// the canonical-coordinate and psi residuals at the samples.
Report check_pencil(const Principal& b, const std::vector<Point>& points);

/// Semi-Hamiltonian checks of the principal flows p = 1..min(pmax, 3) at the
/// samples; for n = 1 also that the flow p = 0 is flagged degenerate.
Report check_velocities(const Principal& b, const std::vector<Point>& points);

/// Graded antisymmetry, graded Jacobi and the three derivation identities on
/// seeded random pairs.
Report check_brackets(int pairs, std::uint64_t seed);

/// Largest coefficient of a, grouped by jet monomial, with v set to the point.
double residual_at(const DiffPoly& a, const Point& v);

struct DeformationRun {
  DeformedData data;
  std::optional<DeformedOmega> omega;
  Report report;
  std::string fuzz_note;
};

/// Builds (from K) or takes the deformation, optionally perturbs it, and runs
/// the deformation suite. Errors from the construction become failing records.
DeformationRun run_deformation(const DeformationSpec& spec, const Principal& base, const std::string& fuzz = {},
                               std::uint64_t seed = 0);

struct SolveRun {
  ScalarField field;
  std::optional<TauGrid> tau;
  std::optional<GalileanShiftResult> galilean;
  std::string status = "ok";  // ok, truncated, failed
  Report report;
};

SolveRun run_solve(const SolverSpec& spec, const Principal& base);
/// Columns x, t, v, f, f_1_0, f_1_1, residual.
void write_csv(const std::filesystem::path& path, const SolveRun& run);

}  // namespace taucover
