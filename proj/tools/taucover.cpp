#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "taucover/errors.hpp"
#include "taucover/io.hpp"
#include "taucover/pipeline.hpp"

namespace fs = std::filesystem;
using namespace taucover;

namespace {

enum Exit { kOk = 0, kFailed = 1, kNotWDVV = 2, kRecursion = 3, kUsage = 64, kDataErr = 65, kNoInput = 66, kSoftware = 70 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string spec;
  std::optional<int> pmax, dmax;
  std::optional<std::uint64_t> seed;
  std::string fuzz;
  std::string out = "taucover_out";
};

struct Context {
  Options opt;
  ProblemSpec spec;
  std::uint64_t fuzz_seed = 1;
};

Context load(const Options& opt) {
  if (opt.spec.empty()) throw UsageError("--spec is required");
  if (!opt.fuzz.empty()) {
    const auto& t = fuzz_targets();
    if (std::find(t.begin(), t.end(), opt.fuzz) == t.end()) {
      std::string known;
      for (const auto& s : t) known += (known.empty() ? "" : ", ") + s;
      throw UsageError("unknown --fuzz target '" + opt.fuzz + "' (known: " + known + ")");
    }
  }
  if (opt.pmax && *opt.pmax < 0) throw UsageError("--pmax must be nonnegative");
  if (opt.dmax && *opt.dmax < 0) throw UsageError("--dmax must be nonnegative");
  Context c;
  c.opt = opt;
  fs::path path = opt.spec;
  c.spec = parse_spec(read_json(path), path.has_parent_path() ? path.parent_path() : fs::path("."));
  if (opt.pmax)
    for (auto& p : c.spec.potentials) p.pmax = *opt.pmax;
  if (opt.dmax)
    for (auto& d : c.spec.deformations)
      if (d.K) d.dmax = *opt.dmax;
  if (opt.seed) {
    c.spec.samples.seed = *opt.seed;
    c.spec.bracket_seed = *opt.seed;
    c.fuzz_seed = *opt.seed;
  }
  return c;
}

std::string input_hash(const Context& c, const std::string& command) {
  Json key = {{"command", command},
              {"spec", c.spec.raw},
              {"pmax", c.opt.pmax ? Json(*c.opt.pmax) : Json()},
              {"dmax", c.opt.dmax ? Json(*c.opt.dmax) : Json()},
              {"seed", c.opt.seed ? Json(*c.opt.seed) : Json()},
              {"fuzz", c.opt.fuzz}};
  return fnv1a_hex(key.dump());
}

// Report file: records plus provenance; report_hash covers everything else.
Json report_file(const Context& c, const std::string& command, const Report& r, const std::vector<std::string>& notes,
                 Json extra = Json::object()) {
  Json j = report_to_json(r);
  j["tool"] = "taucover";
  j["version"] = kToolVersion;
  j["command"] = command;
  j["input_hash"] = input_hash(c, command);
  j["seed"] = c.fuzz_seed;
  j["fuzz"] = c.opt.fuzz;
  j["fuzz_notes"] = notes;
  for (auto& [k, v] : extra.items()) j[k] = v;
  j["report_hash"] = fnv1a_hex(j.dump());
  return j;
}

void summarize(const std::string& title, const Report& r) {
  int failed = 0, residual = 0;
  for (const auto& c : r.records) {
    residual += c.informational;
    if (!c.pass) {
      ++failed;
      std::printf("  FAIL %s  value=%g  %s\n", c.name.c_str(), c.value, c.context.c_str());
    }
  }
  std::printf("%s: %zu checks, %d failed, %d reported as residuals\n", title.c_str(), r.records.size(), failed,
              residual);
}

WDVVPotential builtin(const std::string& name) {
  return potential_from_json(Json{{"builtin", name}});
}

// Base potential by name: spec potentials first, then builtins.
WDVVPotential find_base(const ProblemSpec& s, const std::string& name) {
  for (const auto& p : s.potentials)
    if (p.name == name) return p.potential;
  try {
    return builtin(name);
  } catch (const ParseError&) {
    throw ParseError("unknown base potential '" + name + "'");
  }
}

// Runs tasks concurrently and concatenates their reports in task order.
Report run_tasks(const std::vector<std::function<Report()>>& tasks) {
  std::vector<Report> out(tasks.size());
  parallel_for(tasks.size(), [&](std::size_t i) { out[i] = tasks[i](); });
  Report all;
  for (const auto& r : out) all.append(r);
  return all;
}

std::vector<Principal> build_all(const ProblemSpec& s) {
  std::vector<Principal> out(s.potentials.size());
  parallel_for(out.size(), [&](std::size_t i) {
    const auto& p = s.potentials[i];
    out[i] = build_principal(p.name, p.potential, p.pmax);
  });
  return out;
}

int cmd_build(const Options& opt) {
  Context c = load(opt);
  if (c.spec.potentials.empty()) throw UsageError("spec lists no potentials to build");
  auto principals = build_all(c.spec);
  for (const auto& b : principals) {
    fs::path path = fs::path(opt.out) / (b.name + "_tables.json");
    write_json(path, tables_to_json(b.name, b.theta, b.h, b.omega));
    std::printf("%s: n=%d pmax=%d -> %s\n", b.name.c_str(), b.h.n, b.pmax, path.string().c_str());
  }
  return kOk;
}

std::vector<DeformationRun> run_deformations(const Context& c, std::vector<std::string>& notes) {
  const auto& defs = c.spec.deformations;
  std::vector<DeformationRun> runs(defs.size());
  std::string fuzz = is_deformation_fuzz(c.opt.fuzz) ? c.opt.fuzz : std::string();
  parallel_for(defs.size(), [&](std::size_t i) {
    Principal base = build_principal(defs[i].base, find_base(c.spec, defs[i].base), defs[i].pmax);
    runs[i] = run_deformation(defs[i], base, fuzz, c.fuzz_seed + i);
  });
  for (std::size_t i = 0; i < runs.size(); ++i)
    if (!runs[i].fuzz_note.empty()) notes.push_back(defs[i].name + ": " + runs[i].fuzz_note);
  return runs;
}

int cmd_verify(const Options& opt) {
  Context c = load(opt);
  const auto& s = c.spec;
  if (s.potentials.empty() && s.deformations.empty()) throw UsageError("spec lists nothing to verify");
  if (!opt.fuzz.empty() && is_deformation_fuzz(opt.fuzz) && s.deformations.empty())
    throw UsageError("--fuzz " + opt.fuzz + " needs a deformation in the spec");
  if (!opt.fuzz.empty() && !is_deformation_fuzz(opt.fuzz) && s.potentials.empty())
    throw UsageError("--fuzz " + opt.fuzz + " needs a potential in the spec");

  auto principals = build_all(s);
  std::vector<std::string> notes;
  if (!opt.fuzz.empty() && !is_deformation_fuzz(opt.fuzz))
    for (std::size_t i = 0; i < principals.size(); ++i)
      notes.push_back(principals[i].name + ": " + fuzz_principal(principals[i], opt.fuzz, c.fuzz_seed + i));

  std::vector<std::vector<Point>> points(principals.size());
  parallel_for(principals.size(), [&](std::size_t i) { points[i] = sample_points(principals[i], s.samples); });

  std::vector<std::function<Report()>> tasks;
  for (std::size_t i = 0; i < principals.size(); ++i) {
    const Principal& b = principals[i];
    const auto& pts = points[i];
    tasks.push_back([&b] { return check_principal(b); });
    tasks.push_back([&b, &pts] { return check_pencil(b, pts); });
    tasks.push_back([&b, &pts] { return check_velocities(b, pts); });
  }
  tasks.push_back([&s] { return check_brackets(s.bracket_pairs, s.bracket_seed); });
  Report r = run_tasks(tasks);
  for (const auto& d : run_deformations(c, notes)) r.append(d.report);

  write_json(fs::path(opt.out) / "verify_report.json", report_file(c, "verify", r, notes));
  for (const auto& n : notes) std::printf("fuzz: %s\n", n.c_str());
  summarize("verify", r);
  return r.ok() ? kOk : kFailed;
}

int cmd_deform_verify(const Options& opt) {
  Context c = load(opt);
  if (c.spec.deformations.empty()) throw UsageError("spec lists no deformations");
  if (!opt.fuzz.empty() && !is_deformation_fuzz(opt.fuzz))
    throw UsageError("deform-verify accepts only deformation fuzz targets");
  std::vector<std::string> notes;
  auto runs = run_deformations(c, notes);
  Report r;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    r.append(runs[i].report);
    if (runs[i].data.n > 0)
      write_json(fs::path(opt.out) / (c.spec.deformations[i].name + "_deformed.json"), deformed_to_json(runs[i].data));
  }
  write_json(fs::path(opt.out) / "deform_report.json", report_file(c, "deform-verify", r, notes));
  for (const auto& n : notes) std::printf("fuzz: %s\n", n.c_str());
  summarize("deform-verify", r);
  return r.ok() ? kOk : kFailed;
}

int cmd_solve(const Options& opt) {
  Context c = load(opt);
  const auto& s = c.spec;
  if (s.solver.empty()) throw UsageError("spec lists no solver problems");
  if (!opt.fuzz.empty()) throw UsageError("solve takes no --fuzz target");

  // One principal per (base, depth); the tau evaluation needs Omega beyond p.
  std::map<std::pair<std::string, int>, Principal> bases;
  for (const auto& p : s.solver) {
    int depth = std::max(p.problem.p + 1, 3);
    auto key = std::make_pair(p.base, depth);
    if (!bases.count(key)) bases[key] = build_principal(p.base, find_base(s, p.base), depth);
  }
  std::vector<SolveRun> runs(s.solver.size());
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& p = s.solver[i];
    runs[i] = run_solve(p, bases.at({p.base, std::max(p.problem.p + 1, 3)}));
  }

  Report all;
  Json problems = Json::array();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& p = s.solver[i];
    const auto& run = runs[i];
    const auto& F = run.field;
    fs::path csv = fs::path(opt.out) / (p.name + ".csv");
    write_csv(csv, run);
    Json m = {{"name", p.name},
              {"base", p.base},
              {"profile", p.problem.v0.describe()},
              {"p", p.problem.p},
              {"periodic", p.problem.periodic},
              {"grid", {{"nx", F.nx()}, {"nt", F.nt()}}},
              {"status", run.status},
              {"broken", F.broken},
              {"last_valid_t", F.last_valid_t},
              {"breaking_time", F.breaking_time},
              {"csv", csv.filename().string()}};
    if (run.tau) m["route_discrepancy"] = run.tau->route_discrepancy;
    if (run.galilean)
      m["galilean"] = {{"euler_errors", run.galilean->euler_errors},
                       {"rk4_errors", run.galilean->rk4_errors},
                       {"euler_slope", run.galilean->euler_slope},
                       {"rk4_slope", run.galilean->rk4_slope}};
    Json man = report_file(c, "solve", run.report, {}, {{"problem", m}});
    write_json(fs::path(opt.out) / (p.name + "_manifest.json"), man);
    problems.push_back(m);
    all.append(run.report);
    std::printf("%s: %s, %zux%zu grid, last valid t = %g\n", p.name.c_str(), run.status.c_str(), F.nx(), F.nt(),
                F.last_valid_t);
  }
  write_json(fs::path(opt.out) / "solve_report.json", report_file(c, "solve", all, {}, {{"problems", problems}}));
  summarize("solve", all);
  return all.ok() ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"taucover: tau covers of bihamiltonian hierarchies"};
  app.require_subcommand(1);
  Options opt;
  std::function<int(const Options&)> action;
  auto add = [&](const std::string& name, const std::string& help, int (*fn)(const Options&)) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--spec", opt.spec, "problem spec (JSON)");
    sub->add_option("--pmax", opt.pmax, "override pmax of every potential");
    sub->add_option("--dmax", opt.dmax, "override dmax of Miura-generated deformations");
    sub->add_option("--seed", opt.seed, "seed for samples, bracket pairs and fuzzing");
    sub->add_option("--fuzz", opt.fuzz, "perturb one table: h, omega, deformation-h, deformation-P1, deformation-omega");
    sub->add_option("--out", opt.out, "output directory")->capture_default_str();
    sub->callback([&action, fn] { action = fn; });
  };
  add("build", "write theta/h/Omega tables", cmd_build);
  add("verify", "run the identity suite", cmd_verify);
  add("solve", "solve the scalar problems and evaluate the tau cover", cmd_solve);
  add("deform-verify", "run the deformation suite", cmd_deform_verify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }
  try {
    return action(opt);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kUsage;
  } catch (const MissingFixture& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kNoInput;
  } catch (const NotWDVV& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kNotWDVV;
  } catch (const RecursionInconsistent& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kRecursion;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kDataErr;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kSoftware;
  }
}
