#include "taucover/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "taucover/brackets.hpp"
#include "taucover/errors.hpp"

namespace taucover {

namespace {

Rational sgn(int k) { return k % 2 == 0 ? 1 : -1; }

std::string num(double x) {
  std::ostringstream s;
  s.precision(6);
  s << x;
  return s.str();
}

// Nonzero rational +-(1..5)/(1..7).
Rational random_coefficient(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> num(1, 5), den(1, 7), sign(0, 1);
  return make_rational(sign(rng) ? num(rng) : -num(rng), den(rng));
}

int pick(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

LocalFunctional unit_field(int n) { return LocalFunctional(DiffPoly::variable(n, theta(1))); }

}  // namespace

Principal build_principal(const std::string& name, const WDVVPotential& pot, int pmax) {
  Principal b;
  b.name = name;
  b.potential = pot;
  b.frob = analyze(pot);
  b.theta = build_theta(b.frob, pmax);
  b.h = build_h(b.theta);
  b.pmax = pmax;
  b.flows = build_flows(b.h);
  b.omega = build_omega(b.h);
  return b;
}

Report prefixed(const Report& r, const std::string& prefix) {
  Report out;
  for (auto c : r.records) {
    c.name = prefix + "." + c.name;
    out.records.push_back(std::move(c));
  }
  return out;
}

DiffPoly random_diffpoly(std::mt19937_64& rng, int n, int super, int std_degree, int terms, int vdeg) {
  std::uniform_int_distribution<int> coef(-4, 4), den(1, 3), idx(1, n), vd(0, vdeg);
  DiffPoly out(n);
  for (int t = 0; t < terms; ++t) {
    DiffPoly term = DiffPoly::constant(n, make_rational(coef(rng), den(rng)));
    int remaining = std_degree;
    for (int k = 0; k < super; ++k) {
      std::uniform_int_distribution<int> ord(0, remaining);
      int s = (k == super - 1 && rng() % 2) ? remaining : ord(rng);
      remaining -= s;
      term = term * DiffPoly::variable(n, theta(idx(rng), s));
    }
    while (remaining > 0) {
      std::uniform_int_distribution<int> ord(1, remaining);
      int s = ord(rng);
      remaining -= s;
      term = term * DiffPoly::variable(n, u(idx(rng), s));
    }
    int d = vd(rng);
    for (int k = 0; k < d; ++k) term = term * DiffPoly::variable(n, v(idx(rng)));
    out += term;
  }
  return out;
}

const std::vector<std::string>& fuzz_targets() {
  static const std::vector<std::string> t = {"h", "omega", "deformation-h", "deformation-P1", "deformation-omega"};
  return t;
}

bool is_deformation_fuzz(const std::string& target) { return target.rfind("deformation-", 0) == 0; }

std::string fuzz_principal(Principal& b, const std::string& target, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int n = b.h.n, pmax = b.pmax;
  CoeffPoly::Exponents e(n, 0);
  e[pick(rng, 0, n - 1)] = pick(rng, 1, 3);
  Rational c = random_coefficient(rng);
  CoeffPoly m = CoeffPoly::monomial(n, e, c);
  if (target == "h") {
    if (pmax < 0) throw DimensionMismatch("nothing to perturb");
    int a = pick(rng, 0, n - 1), p = pick(rng, -1, pmax - 1);
    b.h(a, p) += m;
    b.flows = build_flows(b.h);
    return "h" + cell_label(a, p, a, p).substr(0, cell_label(a, p, a, p).find(';')) + ") += " + m.str();
  }
  if (target == "omega") {
    int a = pick(rng, 0, n - 1), p = pick(rng, 0, b.omega.pmax), bb = pick(rng, 0, n - 1),
        q = pick(rng, 0, b.omega.pmax);
    b.omega(a, p, bb, q) += m;
    return "omega" + cell_label(a, p, bb, q) + " += " + m.str();
  }
  throw ParseError("unknown fuzz target '" + target + "'");
}

Report check_principal(const Principal& b) {
  Report r;
  r.add("theta_recursion", check_theta_recursion(b.frob, b.theta), 0, "depth " + std::to_string(b.theta.depth));
  r.append(verify_tau_structure(b.omega, b.h, b.flows));
  r.append(verify_tau_symmetry(b.flows, b.h, b.pmax));
  r.append(verify_commutativity(b.flows, b.pmax));
  r.append(verify_hamiltonian_flows(b.h, b.flows, b.pmax));
  r.append(galilean_check(b.omega, b.flows));
  return prefixed(r, b.name);
}

std::vector<Point> sample_points(const Principal& b, const SampleSpec& s) {
  if (!s.points.empty()) {
    for (const auto& p : s.points)
      if (static_cast<int>(p.size()) != b.frob.n) throw DimensionMismatch("sample point has the wrong dimension");
    return s.points;
  }
  auto [g1, g2] = pencil_from_frobenius(b.frob);
  std::mt19937_64 rng(s.seed);
  std::uniform_real_distribution<double> box(-1.5, 1.5);
  std::vector<Point> pts;
  for (int trial = 0; trial < 1000 * std::max(1, s.count) && static_cast<int>(pts.size()) < s.count; ++trial) {
    Point v(b.frob.n);
    for (auto& x : v) x = box(rng);
    try {
      canonical_coordinates_at(g1, g2, v);
    } catch (const Error&) {
      continue;
    }
    pts.push_back(v);
  }
  if (static_cast<int>(pts.size()) < s.count) throw DegenerateSpectrum("too few semisimple sample points");
  return pts;
}

double residual_at(const DiffPoly& a, const Point& v) {
  std::map<DiffPoly::Mono, double> grouped;
  const int n = a.dim();
  for (const auto& [m, c] : a.terms()) {
    double val = c.get_d();
    DiffPoly::Mono jet;
    for (auto packed : m) {
      JetVariable x = DiffPoly::variable_of(n, DiffPoly::code(packed));
      if (x.parity == Parity::Even && x.order == 0)
        val *= std::pow(v[x.index - 1], static_cast<int>(DiffPoly::exponent(packed)));
      else
        jet.push_back(packed);
    }
    grouped[jet] += val;
  }
  double worst = 0;
  for (const auto& [_, x] : grouped) worst = std::max(worst, std::abs(x));
  return worst;
}

Report check_pencil(const Principal& b, const std::vector<Point>& points) {
  Report r;
  auto [g1, g2] = pencil_from_frobenius(b.frob);
  const int n = b.frob.n;
  LocalFunctional P1 = poisson_operator(g1), P2 = poisson_operator(g2), Z = unit_field(n);
  r.add("pencil_bihamiltonian", is_bihamiltonian(P1, P2), 0, "exact");
  r.add("pencil_exact_triple", is_exact_triple(P1, P2, Z), 0, "exact, Z = int theta_1");
  std::vector<DiffPoly> brackets = {schouten(P1, P1).density(), schouten(P1, P2).density(),
                                    schouten(P2, P2).density()};
  std::vector<DiffPoly> exactness = {schouten(Z, P1).density(), (schouten(Z, P2) - P1).density()};

  std::map<std::string, double> worst;
  double bracket_res = 0, exact_res = 0, psi_res = 0;
  int failures = 0, trivial_psi = 0, reducible = 0;
  std::string first_failure;
  for (const Point& v : points) {
    for (const auto& x : brackets) bracket_res = std::max(bracket_res, residual_at(x, v));
    for (const auto& x : exactness) exact_res = std::max(exact_res, residual_at(x, v));
    try {
      PencilChart c = canonical_coordinates_at(g1, g2, v);
      for (const auto& [name, val] : c.residuals) worst[name] = std::max(worst[name], val);
      if (n > 1 && !check_irreducible(c)) ++reducible;
      auto psi = [&](const Point& w) { return psi_at(b.frob, canonical_coordinates_at(g1, g2, w)); };
      PsiResidual pr = psi_residual(c, psi);
      psi_res = std::max(psi_res, pr.value);
      trivial_psi += pr.trivial;
    } catch (const Error& e) {
      if (!failures++) first_failure = e.what();
    }
  }
  const std::string ctx = std::to_string(points.size()) + " points";
  r.add("pencil_bracket_residual", bracket_res < 1e-8, bracket_res, ctx + ", [Pa, Pb] coefficients, tol 1e-8");
  r.add("pencil_exactness_residual", exact_res < 1e-8, exact_res, ctx + ", [Z, P1] and [Z, P2] - P1, tol 1e-8");
  r.add("pencil_chart", failures == 0, failures, failures ? first_failure : ctx);
  for (const auto& [name, val] : worst) r.add("chart_" + name, val < 1e-8, val, ctx + ", series derivatives, tol 1e-8");
  r.add("chart_psi", psi_res < 1e-6 && trivial_psi == 0, psi_res, ctx + ", finite differences, tol 1e-6");
  if (n > 1) r.add("chart_irreducible", reducible == 0, reducible, ctx);
  return prefixed(r, b.name);
}

Report check_velocities(const Principal& b, const std::vector<Point>& points) {
  Report r;
  auto [g1, g2] = pencil_from_frobenius(b.frob);
  std::vector<PencilChart> charts;
  for (const Point& v : points) charts.push_back(canonical_coordinates_at(g1, g2, v));
  const int n = b.frob.n, top = std::min(b.pmax, 3);
  for (int a = 0; a < n; ++a)
    for (int p = (n == 1 ? 0 : 1); p <= top; ++p) {
      std::vector<VelocitySample> samples;
      for (const auto& c : charts) samples.push_back(principal_velocities(c, b.h, a, p));
      const std::string flow = "semi_hamiltonian" + cell_label(a, p, a, p).substr(0, cell_label(a, p, a, p).find(';')) + ")";
      Report s;
      try {
        s = check_semi_hamiltonian(samples);
      } catch (const CoincidingVelocities& e) {
        r.add(flow + ".distinct_velocities", false, 0, e.what());
        continue;
      }
      if (n == 1 && p == 0) {
        // A = 1 for the x-translation: the flag must report degeneracy.
        const CheckRecord* nd = s.find("nondegenerate");
        r.add(flow + ".degenerate_flag", nd && !nd->pass, nd ? nd->value : 0, "translation flow has constant speed");
        continue;
      }
      r.append(prefixed(s, flow));
    }
  return prefixed(r, b.name);
}

Report check_brackets(int pairs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  int checked = 0;
  std::vector<std::string> anti, jacobi, dcomm, var, deriv;
  for (int trial = 0; checked < pairs && trial < 10 * pairs + 10; ++trial) {
    const int n = 1 + trial % 2;
    const int p = trial % 3, q = (trial / 3) % 3, r = (trial + 1) % 3;
    LocalFunctional P(random_diffpoly(rng, n, p, 1 + trial % 3));
    LocalFunctional Q(random_diffpoly(rng, n, q, (trial / 2) % 4));
    LocalFunctional R(random_diffpoly(rng, n, r, trial % 3, 2));
    if (P.is_zero() || Q.is_zero() || R.is_zero()) continue;
    ++checked;
    const std::string tag = "trial " + std::to_string(trial);
    anti.push_back(schouten(P, Q) == sgn(p * q) * schouten(Q, P) ? "" : tag);
    LocalFunctional J = sgn(p * r) * schouten(schouten(P, Q), R) + sgn(q * p) * schouten(schouten(Q, R), P) +
                        sgn(r * q) * schouten(schouten(R, P), Q);
    jacobi.push_back(J.is_zero() ? "" : tag);
    DiffPoly a = random_diffpoly(rng, n, trial % 2, 2);
    EvolutionaryDerivation DP(P), DQ(Q);
    dcomm.push_back(total_derivative(DP(a)) == DP(total_derivative(a)) ? "" : tag);
    LocalFunctional PQ = schouten(P, Q);
    bool ok = true;
    for (int i = 1; i <= n; ++i) {
      DiffPoly lhs = variational_derivative(PQ.density(), i, Parity::Even);
      DiffPoly rhs = DP(variational_derivative(Q.density(), i, Parity::Even)) +
                     sgn(p * q) * DQ(variational_derivative(P.density(), i, Parity::Even));
      ok = ok && lhs == rhs;
    }
    var.push_back(ok ? "" : tag);
    DiffPoly lhs = PQ.is_zero() ? DiffPoly(n) : sgn(p + 1) * EvolutionaryDerivation(PQ)(a);
    DiffPoly rhs = DP(DQ(a)) - sgn((p + 1) * (q + 1)) * DQ(DP(a));
    deriv.push_back(lhs == rhs ? "" : tag);
  }
  Report out;
  const std::string ctx = std::to_string(checked) + " seeded triples, seed " + std::to_string(seed);
  out.add("bracket_pairs", checked >= pairs, checked, ctx);
  add_cells(out, "bracket_antisymmetry", anti, ctx);
  add_cells(out, "bracket_jacobi", jacobi, ctx);
  add_cells(out, "bracket_lemma_d_commutes", dcomm, ctx);
  add_cells(out, "bracket_lemma_variational", var, ctx);
  add_cells(out, "bracket_lemma_derivation", deriv, ctx);
  return out;
}

DeformationRun run_deformation(const DeformationSpec& spec, const Principal& base, const std::string& fuzz,
                               std::uint64_t seed) {
  DeformationRun run;
  Report& r = run.report;
  try {
    if (spec.K) {
      DeformedData d = DeformedData::trivial(base.h, spec.pmax, spec.dmax);
      LocalFunctional K(DiffPoly::parse(base.h.n, *spec.K));
      EquivalenceResult eq = generate_equivalent(d, K, base.omega);
      r.append(prefixed(eq.report, "equivalence"));
      run.data = eq.hat;
    } else {
      run.data = *spec.data;
    }
  } catch (const Error& e) {
    r.add("deformation_setup", false, 0, e.what());
    run.report = prefixed(r, spec.name);
    return run;
  }
  DeformedData& d = run.data;
  std::mt19937_64 rng(seed);
  const int n = d.n;
  if (fuzz == "deformation-h") {
    int a = pick(rng, 0, n - 1), p = pick(rng, 0, std::max(0, d.pmax - 1)), i = pick(rng, 1, n);
    DiffPoly m = random_coefficient(rng) * DiffPoly::variable(n, u(i, 1)) * DiffPoly::variable(n, u(i, 1));
    d(a, p) += m;
    run.fuzz_note = "h~(" + std::to_string(a + 1) + "," + std::to_string(p) + ") += " + m.str();
  } else if (fuzz == "deformation-P1") {
    int i = pick(rng, 1, n);
    DiffPoly m = random_coefficient(rng) * DiffPoly::variable(n, v(i)) * DiffPoly::variable(n, theta(i, 0)) *
                 DiffPoly::variable(n, theta(i, 3));
    d.P1 += LocalFunctional(m);
    run.fuzz_note = "P~1 += int " + m.str();
  }
  r.append(verify_deformation(d));
  try {
    run.omega = build_omega_deformed(d, base.omega);
    r.add("deformed_omega_exact", true, 0, "all cells integrated");
  } catch (const Error& e) {
    r.add("deformed_omega_exact", false, 0, e.what());
    run.report = prefixed(r, spec.name);
    return run;
  }
  if (fuzz == "deformation-omega") {
    int a = pick(rng, 0, n - 1), p = pick(rng, 0, d.pmax), b = pick(rng, 0, n - 1), q = pick(rng, 0, d.pmax);
    int i = pick(rng, 1, n);
    DiffPoly m = random_coefficient(rng) * DiffPoly::variable(n, u(i, 2));
    (*run.omega)(a, p, b, q) += m;
    run.fuzz_note = "Omega~" + cell_label(a, p, b, q) + " += " + m.str();
  }
  r.append(verify_omega_deformed(d, *run.omega));
  NormalCoordinates nc = normal_coordinates(d);
  r.append(check_normal_coordinates(nc));
  r.append(check_deformed_galilean(d, *run.omega, nc));
  run.report = prefixed(r, spec.name);
  return run;
}

SolveRun run_solve(const SolverSpec& spec, const Principal& base) {
  SolveRun run;
  Report& r = run.report;
  const auto& prob = spec.problem;
  SolveOptions opt;
  opt.truncate_on_breaking = spec.truncate_on_breaking;
  try {
    run.field = solve_characteristics(prob, base.h, opt);
  } catch (const Error& e) {
    run.status = "failed";
    r.add("solve_characteristics", false, 0, e.what());
    run.report = prefixed(r, spec.name);
    return run;
  }
  const ScalarField& F = run.field;
  if (F.broken) {
    run.status = "truncated";
    r.add("solve_characteristics", true, F.last_valid_t,
          "breaking detected, truncated at last valid t = " + num(F.last_valid_t) + ", estimate " +
              num(F.breaking_time));
  } else {
    r.add("solve_characteristics", true, F.last_valid_t, "no breaking up to t = " + num(F.last_valid_t));
  }
  // Linear profiles under p = 1 have v = v0(x) / (1 - eps t) with eps = v0'.
  if (prob.p == 1 && prob.v0.kind == Profile::Kind::Polynomial && prob.v0.coeffs.size() <= 2) {
    double a = prob.v0.coeffs.empty() ? 0 : prob.v0.coeffs[0];
    double eps = prob.v0.coeffs.size() == 2 ? prob.v0.coeffs[1] : 0;
    double worst = 0;
    for (std::size_t it = 0; it < F.nt(); ++it)
      for (std::size_t ix = 0; ix < F.nx(); ++ix)
        worst = std::max(worst, std::abs(F.at(it, ix) - (a + eps * F.x[ix]) / (1 - eps * F.t[it])));
    r.add("solve_exact_linear", worst < 1e-10, worst, "v = (a + eps x)/(1 - eps t), tol 1e-10");
  }
  try {
    run.tau = evaluate_tau(F, base.omega);
  } catch (const Error& e) {
    run.status = "failed";
    r.add("tau_evaluate", false, 0, e.what());
    run.report = prefixed(r, spec.name);
    return run;
  }
  const TauGrid& T = *run.tau;
  // A truncated field ends next to a shock; its diagnostics are reported, not asserted.
  auto check = [&](const std::string& name, bool ok, double value, const std::string& ctx) {
    if (F.broken)
      r.note(name, value, ctx + "; truncated near breaking, not asserted");
    else
      r.add(name, ok, value, ctx);
  };
  const std::string grid = std::to_string(F.nx()) + "x" + std::to_string(F.nt()) + " grid";
  check("tau_route_discrepancy", T.route_discrepancy <= spec.route_tol, T.route_discrepancy,
        grid + ", tol " + num(spec.route_tol));
  if (T.residuals.empty) {
    r.add("tau_residuals", true, 0, grid + ", empty diagnostics");
  } else {
    const auto& R = T.residuals;
    double worst = std::max({R.fx, R.ft, R.fqx, R.fqt});
    check("tau_residuals", worst <= spec.residual_tol, worst, grid + ", fourth-order differences, tol " +
                                                                   num(spec.residual_tol));
    check("tau_mixed_partials", R.mixed <= spec.residual_tol, R.mixed, grid + ", tol " + num(spec.residual_tol));
  }
  if (prob.periodic) {
    for (int q = -1; q <= std::min(3, base.pmax); ++q) {
      ConservationResult c = check_conservation(F, base.h, q);
      check("conservation_h" + std::to_string(q), c.drift <= 1e-8, c.drift, "periodic window, tol 1e-8");
    }
  }
  if (spec.s_step && prob.p >= 1) {
    try {
      run.galilean = galilean_shift_check(F, T, base.h, base.omega, *spec.s_step, -1, spec.route_tol);
      r.append(run.galilean->report);
    } catch (const Error& e) {
      r.add("galilean_shift", false, 0, e.what());
    }
  }
  run.report = prefixed(r, spec.name);
  return run;
}

void write_csv(const std::filesystem::path& path, const SolveRun& run) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  out.precision(17);
  out << "x,t,v,f,f_1_0,f_1_1,residual\n";
  const ScalarField& F = run.field;
  for (std::size_t it = 0; it < F.nt(); ++it)
    for (std::size_t ix = 0; ix < F.nx(); ++ix) {
      std::size_t k = it * F.nx() + ix;
      out << F.x[ix] << "," << F.t[it] << "," << F.v[k];
      if (run.tau)
        out << "," << run.tau->f[k] << "," << run.tau->fq[0][k] << "," << run.tau->fq[1][k] << ","
            << run.tau->node_residual[k];
      else
        out << ",,,,";
      out << "\n";
    }
}

}  // namespace taucover
