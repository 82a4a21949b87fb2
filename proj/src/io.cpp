#include "taucover/io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "taucover/errors.hpp"

namespace taucover {

namespace {

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("field '") + key + "': " + e.what());
  }
}

const Json& require(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(where + ": missing field '" + key + "'");
  return j.at(key);
}

void only_keys(const Json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": expected an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, _] : j.items())
    if (!allowed.count(k)) throw ParseError(where + ": unknown field '" + k + "'");
}

std::string text_of(const Json& j, const std::string& where) {
  if (!j.is_string()) throw ParseError(where + ": expected a string");
  return j.get<std::string>();
}

Profile profile_from_json(const Json& j) {
  const std::string where = "profile";
  if (!j.is_object() || j.size() != 1) throw ParseError(where + ": expected one of polynomial, sine, constant");
  if (j.contains("polynomial")) return Profile::polynomial(j.at("polynomial").get<std::vector<double>>());
  if (j.contains("constant")) return Profile::constant(j.at("constant").get<double>());
  if (j.contains("sine")) {
    const Json& s = j.at("sine");
    only_keys(s, {"mean", "amplitude", "wavenumber"}, "sine");
    return Profile::sine(get_or(s, "mean", 0.0), get_or(s, "amplitude", 1.0), get_or(s, "wavenumber", 1.0));
  }
  throw ParseError(where + ": expected one of polynomial, sine, constant");
}

SolverSpec solver_from_json(const Json& j) {
  only_keys(j,
            {"name", "base", "profile", "p", "x", "t", "periodic", "s_step", "truncate_on_breaking", "route_tol",
             "residual_tol"},
            "solver");
  SolverSpec s;
  s.name = get_or<std::string>(j, "name", "solve");
  s.base = get_or<std::string>(j, "base", "kdv");
  s.problem.v0 = profile_from_json(require(j, "profile", "solver " + s.name));
  s.problem.p = get_or(j, "p", 1);
  const Json& x = require(j, "x", "solver " + s.name);
  const Json& t = require(j, "t", "solver " + s.name);
  if (!x.is_array() || x.size() != 3) throw ParseError("solver " + s.name + ": x must be [min, max, nodes]");
  if (!t.is_array() || t.size() != 2) throw ParseError("solver " + s.name + ": t must be [max, nodes]");
  s.problem.x0 = x[0].get<double>();
  s.problem.x1 = x[1].get<double>();
  s.problem.nx = x[2].get<int>();
  s.problem.t1 = t[0].get<double>();
  s.problem.nt = t[1].get<int>();
  s.problem.periodic = get_or(j, "periodic", false);
  if (j.contains("s_step")) s.s_step = j.at("s_step").get<double>();
  s.truncate_on_breaking = get_or(j, "truncate_on_breaking", true);
  s.route_tol = get_or(j, "route_tol", 1e-6);
  s.residual_tol = get_or(j, "residual_tol", 1e-4);
  return s;
}

}  // namespace

CoeffPoly parse_coeff(int n, std::string_view text) { return to_coeff(DiffPoly::parse(n, text)); }

Rational json_rational(const Json& j) {
  if (j.is_string()) return parse_rational(j.get<std::string>());
  if (j.is_number_integer()) return Rational(j.get<long>());
  throw ParseError("expected a rational as \"p/q\" or an integer");
}

Json rational_json(const Rational& r) { return to_string(r); }

WDVVPotential potential_from_json(const Json& j) {
  if (j.contains("builtin")) {
    std::string b = text_of(j.at("builtin"), "builtin");
    if (b == "kdv") return kdv_potential();
    if (b == "a2") return a2_potential();
    if (b == "a3") return a3_potential();
    throw ParseError("unknown builtin potential '" + b + "'");
  }
  WDVVPotential p;
  p.n = require(j, "n", "potential").get<int>();
  if (p.n < 1) throw ParseError("potential: n must be positive");
  p.F = parse_coeff(p.n, text_of(require(j, "F", "potential"), "F"));
  if (j.contains("euler")) {
    const Json& e = j.at("euler");
    EulerData ed;
    for (const auto& c : require(e, "coeffs", "euler")) ed.coeffs.push_back(json_rational(c));
    ed.weight = json_rational(require(e, "weight", "euler"));
    if (static_cast<int>(ed.coeffs.size()) != p.n) throw ParseError("euler: expected n coefficients");
    p.euler = ed;
  }
  return p;
}

Json potential_to_json(const WDVVPotential& p) {
  Json j;
  j["n"] = p.n;
  j["F"] = p.F.str();
  if (p.euler) {
    Json c = Json::array();
    for (const auto& r : p.euler->coeffs) c.push_back(rational_json(r));
    j["euler"] = {{"coeffs", c}, {"weight", rational_json(p.euler->weight)}};
  }
  return j;
}

Json tables_to_json(const std::string& name, const ThetaTable& theta, const DensityTable& h, const OmegaTable& omega) {
  Json j;
  j["format"] = "taucover-tables";
  j["version"] = 1;
  j["name"] = name;
  j["n"] = h.n;
  j["pmax"] = omega.pmax;
  Json eta = Json::array();
  for (const auto& row : h.eta) {
    Json r = Json::array();
    for (const auto& x : row) r.push_back(rational_json(x));
    eta.push_back(r);
  }
  j["eta"] = eta;
  Json th = Json::array();
  for (int a = 0; a < theta.n; ++a) {
    Json row = Json::array();
    for (int p = 0; p <= theta.depth; ++p) row.push_back(theta(a, p).str());
    th.push_back(row);
  }
  j["theta"] = th;
  Json hs = Json::array();
  for (int a = 0; a < h.n; ++a) {
    Json row = Json::array();
    for (int p = -1; p <= omega.pmax; ++p) row.push_back(h(a, p).str());
    hs.push_back(row);
  }
  j["h"] = hs;
  Json om = Json::array();
  for (int a = 0; a < omega.n; ++a) {
    Json ap = Json::array();
    for (int p = 0; p <= omega.pmax; ++p) {
      Json bq = Json::array();
      for (int b = 0; b < omega.n; ++b) {
        Json q_row = Json::array();
        for (int q = 0; q <= omega.pmax; ++q) q_row.push_back(omega(a, p, b, q).str());
        bq.push_back(q_row);
      }
      ap.push_back(bq);
    }
    om.push_back(ap);
  }
  j["omega"] = om;
  return j;
}

Json deformed_to_json(const DeformedData& d) {
  Json j;
  j["format"] = "taucover-deformation";
  j["n"] = d.n;
  j["pmax"] = d.pmax;
  j["dmax"] = d.dmax;
  Json eta = Json::array();
  for (const auto& row : d.eta) {
    Json r = Json::array();
    for (const auto& x : row) r.push_back(rational_json(x));
    eta.push_back(r);
  }
  j["eta"] = eta;
  j["P1"] = d.P1.density().str();
  j["Z"] = d.Z.density().str();
  Json hs = Json::array();
  for (int a = 0; a < d.n; ++a) {
    Json row = Json::array();
    for (int p = -1; p <= d.pmax; ++p) row.push_back(d(a, p).str());
    hs.push_back(row);
  }
  j["h"] = hs;
  return j;
}

DeformedData deformed_from_json(const Json& j) {
  only_keys(j, {"format", "n", "pmax", "dmax", "eta", "P1", "Z", "h", "base"}, "deformation fixture");
  DeformedData d;
  d.n = require(j, "n", "deformation").get<int>();
  d.pmax = require(j, "pmax", "deformation").get<int>();
  d.dmax = require(j, "dmax", "deformation").get<int>();
  for (const auto& row : require(j, "eta", "deformation")) {
    std::vector<Rational> r;
    for (const auto& x : row) r.push_back(json_rational(x));
    d.eta.push_back(r);
  }
  if (static_cast<int>(d.eta.size()) != d.n) throw ParseError("deformation: eta must be n x n");
  auto inv = inverse(d.eta);
  if (!inv) throw ParseError("deformation: eta is degenerate");
  d.eta_inv = *inv;
  d.P1 = LocalFunctional(DiffPoly::parse(d.n, text_of(require(j, "P1", "deformation"), "P1")));
  d.Z = LocalFunctional(DiffPoly::parse(d.n, text_of(require(j, "Z", "deformation"), "Z")));
  const Json& hs = require(j, "h", "deformation");
  if (static_cast<int>(hs.size()) != d.n) throw ParseError("deformation: h needs n rows");
  d.h.assign(d.n, {});
  for (int a = 0; a < d.n; ++a) {
    if (static_cast<int>(hs[a].size()) != d.pmax + 2) throw ParseError("deformation: h rows need pmax + 2 entries");
    for (const auto& x : hs[a]) d.h[a].push_back(DiffPoly::parse(d.n, text_of(x, "h")));
  }
  return d;
}

Json report_to_json(const Report& r) {
  Json recs = Json::array();
  int failed = 0, residual = 0;
  for (const auto& c : r.records) {
    const char* status = c.informational ? "residual" : c.pass ? "pass" : "fail";
    recs.push_back({{"name", c.name}, {"status", status}, {"value", c.value}, {"context", c.context}});
    failed += !c.pass;
    residual += c.informational;
  }
  int passed = static_cast<int>(r.records.size()) - failed - residual;
  return {{"records", recs},
          {"summary", {{"checks", r.records.size()}, {"failed", failed}, {"passed", passed}, {"residual", residual}}}};
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFixture(path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const Json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  out << j.dump(2) << "\n";
}

ProblemSpec parse_spec(const Json& j, const std::filesystem::path& base_dir) {
  ProblemSpec s;
  s.raw = j;
  only_keys(j, {"potentials", "samples", "brackets", "solver", "deformations"}, "spec");
  try {
    std::set<std::string> names;
    for (const auto& p : j.value("potentials", Json::array())) {
      only_keys(p, {"name", "builtin", "n", "F", "euler", "pmax"}, "potential");
      PotentialSpec ps;
      ps.potential = potential_from_json(p);
      ps.name = p.contains("name") ? p.at("name").get<std::string>() : p.value("builtin", "potential");
      ps.pmax = get_or(p, "pmax", 4);
      if (ps.pmax < 0) throw ParseError("potential " + ps.name + ": pmax must be nonnegative");
      if (!names.insert(ps.name).second) throw ParseError("duplicate potential name '" + ps.name + "'");
      s.potentials.push_back(ps);
    }
    if (j.contains("samples")) {
      const Json& sm = j.at("samples");
      only_keys(sm, {"count", "seed", "points"}, "samples");
      s.samples.count = get_or(sm, "count", 10);
      s.samples.seed = get_or<std::uint64_t>(sm, "seed", 31);
      if (sm.contains("points")) s.samples.points = sm.at("points").get<std::vector<Point>>();
    }
    if (j.contains("brackets")) {
      const Json& b = j.at("brackets");
      only_keys(b, {"pairs", "seed"}, "brackets");
      s.bracket_pairs = get_or(b, "pairs", 20);
      s.bracket_seed = get_or<std::uint64_t>(b, "seed", 1234567);
    }
    for (const auto& p : j.value("solver", Json::array())) s.solver.push_back(solver_from_json(p));
    for (const auto& d : j.value("deformations", Json::array())) {
      only_keys(d, {"name", "base", "pmax", "dmax", "K", "file"}, "deformation");
      DeformationSpec ds;
      ds.name = get_or<std::string>(d, "name", "deformation");
      ds.base = text_of(require(d, "base", "deformation " + ds.name), "base");
      ds.pmax = get_or(d, "pmax", 4);
      ds.dmax = get_or(d, "dmax", 6);
      if (d.contains("K")) ds.K = text_of(d.at("K"), "K");
      if (d.contains("file")) {
        std::filesystem::path f = text_of(d.at("file"), "file");
        if (f.is_relative()) f = base_dir / f;
        ds.data = deformed_from_json(read_json(f));
        ds.pmax = ds.data->pmax;
        ds.dmax = ds.data->dmax;
      }
      if (ds.K.has_value() == ds.data.has_value())
        throw ParseError("deformation " + ds.name + ": give exactly one of K and file");
      s.deformations.push_back(ds);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("spec: ") + e.what());
  }
  return s;
}

}  // namespace taucover
