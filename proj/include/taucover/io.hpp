#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "taucover/deformation.hpp"
#include "taucover/frobenius.hpp"
#include "taucover/hierarchy.hpp"
#include "taucover/report.hpp"
#include "taucover/solver.hpp"

namespace taucover {

using Json = nlohmann::json;

inline constexpr const char* kToolVersion = "1.0.0";

/// Polynomial in v1..vn from its text form. Throws ParseError.
CoeffPoly parse_coeff(int n, std::string_view text);
Rational json_rational(const Json& j);
Json rational_json(const Rational& r);

/// {"builtin": "kdv" | "a2" | "a3"} or {"n", "F", "euler": {"coeffs", "weight"}}.
WDVVPotential potential_from_json(const Json& j);
Json potential_to_json(const WDVVPotential& p);

/// Golden table format: theta to its full depth, h for p = -1..omega.pmax and
/// omega[a][p][b][q], all in canonical text form.
Json tables_to_json(const std::string& name, const ThetaTable& theta, const DensityTable& h, const OmegaTable& omega);

Json deformed_to_json(const DeformedData& d);
DeformedData deformed_from_json(const Json& j);

Json report_to_json(const Report& r);

/// 64-bit FNV-1a, as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

/// Reads a JSON file. Throws MissingFixture or ParseError.
Json read_json(const std::filesystem::path& path);
/// Writes j.dump(2) followed by a newline.
void write_json(const std::filesystem::path& path, const Json& j);

struct PotentialSpec {
  std::string name;
  WDVVPotential potential;
  int pmax = 4;
};

struct SampleSpec {
  int count = 10;
  std::uint64_t seed = 31;
  std::vector<Point> points;  // used instead of random draws when present
};

struct SolverSpec {
  std::string name;
  std::string base = "kdv";
  ScalarICProblem problem;
  std::optional<double> s_step;
  bool truncate_on_breaking = true;
  double route_tol = 1e-6;
  double residual_tol = 1e-4;
};

struct DeformationSpec {
  std::string name;
  std::string base;
  int pmax = 4;
  int dmax = 6;
  std::optional<std::string> K;  // Miura generator, as a density
  std::optional<DeformedData> data;
};

struct ProblemSpec {
  std::vector<PotentialSpec> potentials;
  SampleSpec samples;
  int bracket_pairs = 20;
  std::uint64_t bracket_seed = 1234567;
  std::vector<SolverSpec> solver;
  std::vector<DeformationSpec> deformations;
  Json raw;
};

/// Relative fixture paths resolve against base_dir. Throws ParseError,
/// MissingFixture.
ProblemSpec parse_spec(const Json& j, const std::filesystem::path& base_dir);

}  // namespace taucover
