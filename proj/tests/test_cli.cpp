#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "taucover/errors.hpp"
#include "taucover/io.hpp"
#include "taucover/pipeline.hpp"

using namespace taucover;
namespace fs = std::filesystem;

namespace {

const fs::path kData = TAUCOVER_DATA_DIR;

fs::path scratch(const std::string& tag) {
  fs::path d = fs::temp_directory_path() / ("taucover_cli_" + std::to_string(::getpid()) + "_" + tag);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

// Runs the CLI with stdout and stderr captured in <out>/log.txt.
int run(const std::string& args, const fs::path& out) {
  std::string cmd = std::string(TAUCOVER_CLI) + " " + args + " > " + (out / "log.txt").string() + " 2>&1";
  int rc = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(rc));
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string spec(const std::string& name) { return "--spec " + (kData / name).string(); }

Rational fact(int k) {
  Rational r = 1;
  for (int i = 2; i <= k; ++i) r *= i;
  return r;
}

Rational choose(int n, int k) { return fact(n) / (fact(k) * fact(n - k)); }

// c * v1^k as a DiffPoly, built without the text form under test.
DiffPoly power(const Rational& c, int k) {
  DiffPoly p = DiffPoly::constant(1, c);
  for (int i = 0; i < k; ++i) p = p * DiffPoly::variable(1, v(1));
  return p;
}

int failed(const Json& report) { return report.at("summary").at("failed").get<int>(); }

}  // namespace

TEST_CASE("build reproduces the golden tables byte for byte") {
  fs::path out = scratch("build");
  CHECK(run("build " + spec("kdv_spec.json") + " --out " + out.string(), out) == 0);
  CHECK(run("build " + spec("a2_spec.json") + " --out " + out.string(), out) == 0);
  CHECK(slurp(out / "kdv_tables.json") == slurp(kData / "golden" / "kdv_tables.json"));
  CHECK(slurp(out / "a2_tables.json") == slurp(kData / "golden" / "a2_tables.json"));
  fs::remove_all(out);
}

TEST_CASE("KdV golden tables match the closed forms") {
  Json t = read_json(kData / "golden" / "kdv_tables.json");
  REQUIRE(t.at("n") == 1);
  const int pmax = t.at("pmax").get<int>();
  CHECK(pmax == 6);
  const Json& theta = t.at("theta").at(0);
  for (int p = 0; p < static_cast<int>(theta.size()); ++p)
    CHECK(DiffPoly::parse(1, theta[p].get<std::string>()) == power(1 / fact(p + 1), p + 1));
  const Json& h = t.at("h").at(0);
  REQUIRE(static_cast<int>(h.size()) == pmax + 2);
  for (int p = -1; p <= pmax; ++p)
    CHECK(DiffPoly::parse(1, h[p + 1].get<std::string>()) == power(1 / fact(p + 2), p + 2));
  const Json& om = t.at("omega").at(0);
  for (int p = 0; p <= pmax; ++p)
    for (int q = 0; q <= pmax; ++q)
      CHECK(DiffPoly::parse(1, om[p][0][q].get<std::string>()) ==
            power(choose(p + q, p) / fact(p + q + 1), p + q + 1));
}

TEST_CASE("exit codes") {
  fs::path out = scratch("codes");
  const std::string o = " --out " + out.string();
  CHECK(run("build " + spec("empty_spec.json") + o, out) == 64);
  CHECK(run("build" + o, out) == 64);
  CHECK(run("", out) == 64);
  CHECK(run("build " + spec("not_wdvv_spec.json") + o, out) == 2);
  CHECK(run("verify " + spec("not_wdvv_spec.json") + o, out) == 2);
  CHECK(run("verify " + spec("missing_fixture_spec.json") + o, out) == 66);
  CHECK(run("verify --spec " + (out / "absent.json").string() + o, out) == 66);
  CHECK(run("verify " + spec("kdv_spec.json") + " --fuzz nothing" + o, out) == 64);
  CHECK(run("verify " + spec("kdv_spec.json") + " --fuzz deformation-h" + o, out) == 64);
  CHECK(run("build " + spec("kdv_spec.json") + " --pmax notanumber" + o, out) == 64);
  fs::remove_all(out);
}

TEST_CASE("verify on the default spec passes and is deterministic") {
  fs::path a = scratch("verify_a"), b = scratch("verify_b"), c = scratch("verify_c");
  REQUIRE(run("verify " + spec("default_spec.json") + " --out " + a.string(), a) == 0);
  REQUIRE(run("verify " + spec("default_spec.json") + " --out " + b.string(), b) == 0);
  Json ra = read_json(a / "verify_report.json"), rb = read_json(b / "verify_report.json");
  CHECK(failed(ra) == 0);
  CHECK(ra.at("version") == kToolVersion);
  CHECK(ra.at("report_hash") == rb.at("report_hash"));
  CHECK(slurp(a / "verify_report.json") == slurp(b / "verify_report.json"));

  std::set<std::string> names;
  for (const auto& r : ra.at("records")) names.insert(r.at("name").get<std::string>());
  for (const char* n : {"kdv.tau_symmetry", "a2.commutativity", "a2.galilean_omega_shift", "bracket_jacobi",
                        "a2.pencil_exactness_residual", "a2.chart_egoroff",
                        "a2.semi_hamiltonian(1,1).tsarev", "kdv_miura.deformed_galilean_omega",
                        "kdv_miura_fixture.deformed_omega_symmetry"})
    CHECK_MESSAGE(names.count(n) == 1, n);

  REQUIRE(run("verify " + spec("default_spec.json") + " --seed 7 --out " + c.string(), c) == 0);
  Json rc = read_json(c / "verify_report.json");
  CHECK(rc.at("input_hash") != ra.at("input_hash"));
  for (const auto& d : {a, b, c}) fs::remove_all(d);
}

TEST_CASE("fuzzed tables fail with named checks") {
  fs::path out = scratch("fuzz");
  for (const auto& target : fuzz_targets()) {
    CAPTURE(target);
    CHECK(run("verify " + spec("default_spec.json") + " --fuzz " + target + " --seed 3 --out " + out.string(), out) ==
          1);
    Json r = read_json(out / "verify_report.json");
    CHECK(failed(r) > 0);
    CHECK(r.at("fuzz_notes").size() > 0);
    for (const auto& rec : r.at("records"))
      if (rec.at("status") == "fail") CHECK(!rec.at("name").get<std::string>().empty());
  }
  fs::remove_all(out);
}

TEST_CASE("solve writes CSV and manifests") {
  fs::path out = scratch("solve");
  REQUIRE(run("solve " + spec("default_spec.json") + " --out " + out.string(), out) == 0);
  std::ifstream csv(out / "linear.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "x,t,v,f,f_1_0,f_1_1,residual");

  Json lin = read_json(out / "linear_manifest.json");
  CHECK(lin.at("problem").at("status") == "ok");
  bool exact = false;
  for (const auto& r : lin.at("records"))
    if (r.at("name") == "linear.solve_exact_linear") {
      exact = true;
      CHECK(r.at("status") == "pass");
      CHECK(r.at("value").get<double>() < 1e-10);
    }
  CHECK(exact);

  Json flat = read_json(out / "constant_manifest.json");
  for (const auto& r : flat.at("records"))
    if (r.at("name") == "constant.tau_residuals") CHECK(r.at("value").get<double>() < 1e-12);

  Json brk = read_json(out / "sine_breaking_manifest.json");
  CHECK(brk.at("problem").at("status") == "truncated");
  CHECK(brk.at("problem").at("broken") == true);
  double last = brk.at("problem").at("last_valid_t").get<double>();
  CHECK(last < 1.0);
  CHECK(last > 0.9);
  fs::remove_all(out);
}

TEST_CASE("deform-verify reproduces the stored fixture") {
  fs::path out = scratch("deform");
  REQUIRE(run("deform-verify " + spec("miura_spec.json") + " --out " + out.string(), out) == 0);
  CHECK(slurp(out / "kdv_miura_deformed.json") == slurp(kData / "kdv_miura_deformed.json"));
  CHECK(failed(read_json(out / "deform_report.json")) == 0);
  REQUIRE(run("deform-verify " + spec("fixture_spec.json") + " --out " + out.string(), out) == 0);
  fs::remove_all(out);
}

TEST_CASE("JSON round trips") {
  Json fixture = read_json(kData / "kdv_miura_deformed.json");
  CHECK(deformed_to_json(deformed_from_json(fixture)) == fixture);

  for (const char* b : {"kdv", "a2", "a3"}) {
    WDVVPotential p = potential_from_json(Json{{"builtin", b}});
    WDVVPotential q = potential_from_json(potential_to_json(p));
    CHECK(q.n == p.n);
    CHECK(q.F == p.F);
  }
  CHECK(json_rational(rational_json(make_rational(-7, 12))) == make_rational(-7, 12));
}

TEST_CASE("spec parsing is strict") {
  CHECK_THROWS_AS(parse_spec(Json{{"potentials", Json::array()}, {"extra", 1}}, "."), ParseError);
  Json both = {{"deformations", {{{"name", "d"}, {"base", "kdv"}, {"K", "u1_1^2"}, {"file", "kdv_miura_deformed.json"}}}}};
  CHECK_THROWS_AS(parse_spec(both, kData), ParseError);
  Json absent = {{"deformations", {{{"name", "d"}, {"base", "kdv"}, {"file", "absent.json"}}}}};
  CHECK_THROWS_AS(parse_spec(absent, kData), MissingFixture);
  Json neither = {{"deformations", {{{"name", "d"}, {"base", "kdv"}}}}};
  CHECK_THROWS_AS(parse_spec(neither, kData), ParseError);
  Json dup = {{"potentials", {{{"builtin", "kdv"}}, {{"builtin", "kdv"}}}}};
  CHECK_THROWS_AS(parse_spec(dup, "."), ParseError);
  Json bad_rational = {{"potentials", {{{"n", 1}, {"F", "1/0*v1^3"}}}}};
  CHECK_THROWS(parse_spec(bad_rational, "."));
  Json ok = read_json(kData / "default_spec.json");
  ProblemSpec s = parse_spec(ok, kData);
  CHECK(s.potentials.size() == 2);
  CHECK(s.solver.size() == 4);
  CHECK(s.deformations.size() == 2);
}

TEST_CASE("FNV-1a reference vectors") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}
