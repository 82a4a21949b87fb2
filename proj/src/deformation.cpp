#include "taucover/deformation.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "taucover/brackets.hpp"
#include "taucover/errors.hpp"

namespace taucover {

namespace {

DiffPoly coord(int n, int g) { return DiffPoly::variable(n, v(g + 1)); }

LocalFunctional first_operator(const RatMatrix& eta_inv) { return poisson_operator(HydroMetric::constant(eta_inv)); }

std::string degree_ctx(int dmax) { return "dmax = " + std::to_string(dmax); }

// Cells (a,p) with p = lo..hi flattened.
struct Grid {
  int n, lo, hi;
  std::size_t size() const { return static_cast<std::size_t>(n) * (hi - lo + 1); }
  int a(std::size_t k) const { return static_cast<int>(k) / (hi - lo + 1); }
  int p(std::size_t k) const { return lo + static_cast<int>(k) % (hi - lo + 1); }
};

}  // namespace

DeformedData DeformedData::trivial(const DensityTable& h, int pmax, int dmax) {
  if (h.pmax < pmax) throw DimensionMismatch("density table shorter than pmax");
  DeformedData d;
  d.n = h.n;
  d.pmax = pmax;
  d.dmax = dmax;
  d.eta = h.eta;
  d.eta_inv = h.eta_inv;
  d.P1 = first_operator(h.eta_inv);
  d.Z = LocalFunctional(DiffPoly::variable(h.n, theta(1)));
  d.h.assign(h.n, {});
  for (int a = 0; a < h.n; ++a)
    for (int p = -1; p <= pmax; ++p) d.h[a].push_back(DiffPoly::from_coeff(h(a, p)));
  return d;
}

DiffPoly delta_Z(const LocalFunctional& Q) { return variational_derivative(Q.density(), 1, Parity::Even); }

DeformedFlows::DeformedFlows(const DeformedData& d) : n_(d.n) {
  Grid grid{d.n, -1, d.pmax};
  std::vector<LocalFunctional> X(grid.size(), LocalFunctional(d.n));
  std::vector<std::vector<DiffPoly>> comp(grid.size());
  parallel_for(grid.size(), [&](std::size_t k) {
    LocalFunctional H(d(grid.a(k), grid.p(k)));
    X[k] = truncate(Rational(-1) * schouten(d.P1, H), 1 + d.dmax);
    EvolutionaryDerivation DX(X[k]);
    for (int g = 0; g < d.n; ++g) comp[k].push_back(DX(coord(d.n, g)));
  });
  X_.assign(d.n, {});
  comp_.assign(d.n, {});
  for (std::size_t k = 0; k < grid.size(); ++k) {
    X_[grid.a(k)].push_back(X[k]);
    comp_[grid.a(k)].push_back(comp[k]);
  }
}

DiffPoly DeformedFlows::apply(int a, int p, const DiffPoly& x, int max_degree) const {
  return truncate(EvolutionaryDerivation::from_components(components(a, p))(truncate(x, max_degree)), max_degree);
}

Report verify_deformation(const DeformedData& d) {
  const int n = d.n, P = d.pmax, D = d.dmax;
  DeformedFlows fl(d);
  Report r;
  r.add("deformed_hamiltonian", truncate(schouten(d.P1, d.P1), 2 + D).is_zero(), 0, "[P1,P1] = 0, " + degree_ctx(D));

  Grid grid{n, -1, P};
  const std::size_t cells = grid.size();
  std::vector<std::string> commuting(cells * cells);
  parallel_for(cells * cells, [&](std::size_t k) {
    std::size_t i = k / cells, j = k % cells;
    if (j < i) return;
    LocalFunctional Hb(d(grid.a(j), grid.p(j)));
    if (!truncate(schouten(fl.field(grid.a(i), grid.p(i)), Hb), 1 + D).is_zero())
      commuting[k] = cell_label(grid.a(i), grid.p(i), grid.a(j), grid.p(j));
  });
  add_cells(r, "deformed_poisson_commuting", commuting, "{H~,H~} = 0, " + degree_ctx(D));

  Grid flows{n, 0, P};
  std::vector<std::string> tau(flows.size() * flows.size());
  parallel_for(tau.size(), [&](std::size_t k) {
    std::size_t i = k / flows.size(), j = k % flows.size();
    int a = flows.a(i), p = flows.p(i), b = flows.a(j), q = flows.p(j);
    if (j < i) return;
    if (fl.apply(a, p, d(b, q - 1), 1 + D) != fl.apply(b, q, d(a, p - 1), 1 + D)) tau[k] = cell_label(a, p, b, q);
  });
  add_cells(r, "deformed_tau_symmetry", tau, "p,q <= " + std::to_string(P) + ", " + degree_ctx(D));

  std::vector<std::string> unit, casimir, zrec;
  for (int g = 0; g < n; ++g)
    if (fl.components(0, 0)[g] != DiffPoly::variable(n, u(g + 1, 1))) unit.push_back(cell_label(0, 0, g, 0));
  add_cells(r, "deformed_unit_flow", unit, "d~_{1,0} = d");
  for (int a = 0; a < n; ++a)
    if (!fl.field(a, -1).is_zero()) casimir.push_back(cell_label(a, -1, 0, 0));
  add_cells(r, "deformed_casimir", casimir, "[P~1, H~_{a,-1}] = 0");

  EvolutionaryDerivation DZ(d.Z);
  if (!truncate(schouten(d.Z, d.P1), 1 + D).is_zero()) zrec.push_back("[Z,P1]");
  for (int a = 0; a < n; ++a)
    for (int p = -1; p <= P; ++p) {
      DiffPoly expect = p < 0 ? DiffPoly::constant(n, d.eta[a][0]) : d(a, p - 1);
      if (truncate(DZ(d(a, p)), D) != expect) zrec.push_back(cell_label(a, p, 0, 0));
    }
  add_cells(r, "deformed_Z_recursion", zrec, "D_Z h~_{a,p} = h~_{a,p-1}, " + degree_ctx(D));
  return r;
}

DeformedOmega build_omega_deformed(const DeformedData& d, const OmegaTable& omega) {
  if (omega.pmax < d.pmax || omega.n != d.n) throw DimensionMismatch("principal Omega table too small");
  DeformedFlows fl(d);
  DeformedOmega om;
  om.n = d.n;
  om.pmax = d.pmax;
  om.dmax = d.dmax;
  om.omega.assign(static_cast<std::size_t>(d.n * (d.pmax + 1)) * d.n * (d.pmax + 1), DiffPoly(d.n));
  const int P = d.pmax;
  parallel_for(om.omega.size(), [&](std::size_t k) {
    int q = static_cast<int>(k % (P + 1)), b = static_cast<int>(k / (P + 1) % d.n);
    int p = static_cast<int>(k / (P + 1) / d.n % (P + 1)), a = static_cast<int>(k / (P + 1) / d.n / (P + 1));
    DiffPoly x = fl.apply(a, p, d(b, q - 1), 1 + d.dmax);
    if (!is_exact(x)) throw NotExact("d~_{a,p}(h~_{b,q-1}) is not a total derivative at " + cell_label(a, p, b, q));
    DiffPoly W = integrate(x);
    // The degree zero part is fixed by the principal Omega.
    W += DiffPoly::from_coeff(omega(a, p, b, q)) - homogeneous_component(W, 0);
    om.omega[k] = W;
  });
  return om;
}

Report verify_omega_deformed(const DeformedData& d, const DeformedOmega& om) {
  const int n = d.n, P = om.pmax, D = d.dmax;
  DeformedFlows fl(d);
  std::vector<std::string> deriv(om.omega.size()), sym(om.omega.size()), norm;
  parallel_for(om.omega.size(), [&](std::size_t k) {
    int q = static_cast<int>(k % (P + 1)), b = static_cast<int>(k / (P + 1) % n);
    int p = static_cast<int>(k / (P + 1) / n % (P + 1)), a = static_cast<int>(k / (P + 1) / n / (P + 1));
    if (total_derivative(om(a, p, b, q)) != fl.apply(a, p, d(b, q - 1), 1 + D)) deriv[k] = cell_label(a, p, b, q);
    if (om(a, p, b, q) != om(b, q, a, p)) sym[k] = cell_label(a, p, b, q);
  });
  for (int a = 0; a < n; ++a)
    for (int p = 0; p <= P; ++p)
      if (om(a, p, 0, 0) != d(a, p - 1)) norm.push_back(cell_label(a, p, 0, 0));
  // d~_{g,r} Omega~_{a,p;b,q} = d~_{b,q} Omega~_{a,p;g,r}
  std::vector<std::string> cross(om.omega.size() * n * (P + 1));
  parallel_for(cross.size(), [&](std::size_t k) {
    std::size_t c = k / (static_cast<std::size_t>(n) * (P + 1));
    int r = static_cast<int>(k % (P + 1)), g = static_cast<int>(k / (P + 1) % n);
    int q = static_cast<int>(c % (P + 1)), b = static_cast<int>(c / (P + 1) % n);
    int p = static_cast<int>(c / (P + 1) / n % (P + 1)), a = static_cast<int>(c / (P + 1) / n / (P + 1));
    if (fl.apply(g, r, om(a, p, b, q), 1 + D) != fl.apply(b, q, om(a, p, g, r), 1 + D))
      cross[k] = cell_label(a, p, b, q) + "x(" + std::to_string(g + 1) + "," + std::to_string(r) + ")";
  });
  Report rep;
  std::string ctx = "p,q <= " + std::to_string(P) + ", " + degree_ctx(D);
  add_cells(rep, "deformed_omega_derivative", deriv, ctx);
  add_cells(rep, "deformed_omega_symmetry", sym, ctx);
  add_cells(rep, "deformed_omega_normalization", norm, "Omega~_{a,p;1,0} = h~_{a,p-1}");
  add_cells(rep, "deformed_omega_flows", cross, ctx);
  return rep;
}

DiffPoly NormalCoordinates::in_w(const DiffPoly& a) const { return substitute(a, v_of_w, dmax); }

NormalCoordinates normal_coordinates(const DeformedData& d) {
  const int n = d.n;
  NormalCoordinates nc;
  nc.n = n;
  nc.dmax = d.dmax;
  std::vector<DiffPoly> F;
  for (int a = 0; a < n; ++a) {
    DiffPoly w(n);
    for (int b = 0; b < n; ++b)
      if (d.eta_inv[a][b] != 0) w += d.eta_inv[a][b] * d(b, -1);
    nc.w.push_back(truncate(w, d.dmax));
    F.push_back(nc.w.back() - coord(n, a));
  }
  // v = w - F(v), solved by iteration; each pass fixes at least one more degree.
  for (int a = 0; a < n; ++a) nc.v_of_w.push_back(coord(n, a));
  for (int it = 0; it <= d.dmax; ++it) {
    std::vector<DiffPoly> next;
    for (int a = 0; a < n; ++a) next.push_back(coord(n, a) - substitute(F[a], nc.v_of_w, d.dmax));
    if (next == nc.v_of_w) break;
    nc.v_of_w = std::move(next);
  }
  return nc;
}

Report check_normal_coordinates(const NormalCoordinates& nc) {
  std::vector<std::string> right, left;
  for (int a = 0; a < nc.n; ++a) {
    if (substitute(nc.w[a], nc.v_of_w, nc.dmax) != coord(nc.n, a)) right.push_back(cell_label(a, 0, a, 0));
    if (substitute(nc.v_of_w[a], nc.w, nc.dmax) != coord(nc.n, a)) left.push_back(cell_label(a, 0, a, 0));
  }
  Report r;
  add_cells(r, "normal_coordinates_w_of_v_of_w", right, degree_ctx(nc.dmax));
  add_cells(r, "normal_coordinates_v_of_w_of_v", left, degree_ctx(nc.dmax));
  return r;
}

Report check_deformed_galilean(const DeformedData& d, const DeformedOmega& om, const NormalCoordinates& nc) {
  const int n = d.n, P = om.pmax, D = d.dmax;
  std::vector<DiffPoly> W(om.omega.size());
  parallel_for(W.size(), [&](std::size_t k) { W[k] = nc.in_w(om.omega[k]); });
  std::vector<std::string> fail(W.size());
  for (int a = 0; a < n; ++a)
    for (int p = 0; p <= P; ++p)
      for (int b = 0; b < n; ++b)
        for (int q = 0; q <= P; ++q) {
          DiffPoly rhs(n);
          if (p > 0) rhs += W[om.index(a, p - 1, b, q)];
          if (q > 0) rhs += W[om.index(a, p, b, q - 1)];
          if (p == 0 && q == 0) rhs += DiffPoly::constant(n, d.eta[a][b]);
          if (truncate(partial(W[om.index(a, p, b, q)], v(1)), D) != rhs) fail[om.index(a, p, b, q)] = cell_label(a, p, b, q);
        }
  EvolutionaryDerivation DZ(d.Z);
  std::vector<std::string> unit;
  for (int g = 0; g < n; ++g)
    if (truncate(DZ(nc.w[g]), D) != DiffPoly::constant(n, g == 0 ? 1 : 0)) unit.push_back(cell_label(g, 0, g, 0));
  DeformedFlows fl(d);
  std::vector<std::string> inter;
  for (int b = 0; b < n; ++b)
    for (int q = 0; q <= P; ++q)
      for (int g = 0; g < n; ++g) {
        DiffPoly comm = truncate(DZ(fl.components(b, q)[g]), 1 + D) - fl.apply(b, q, DZ(coord(n, g)), 1 + D);
        DiffPoly expect = q > 0 ? fl.components(b, q - 1)[g] : DiffPoly(n);
        if (comm != expect) inter.push_back(cell_label(b, q, g, 0));
      }
  Report r;
  add_cells(r, "deformed_galilean_omega", fail, "p,q <= " + std::to_string(P) + ", " + degree_ctx(D));
  add_cells(r, "deformed_galilean_DZ_w", unit, "D_Z w^g = delta^g_1");
  add_cells(r, "deformed_galilean_DZ_intertwining", inter, "[D_Z, d~_{b,q}] = d~_{b,q-1}");
  return r;
}

EquivalenceResult generate_equivalent(const DeformedData& d, const LocalFunctional& K, const OmegaTable& omega) {
  if (d.pmax < 1) throw DimensionMismatch("generate_equivalent needs pmax >= 1");
  const int n = d.n, D = d.dmax;
  EquivalenceResult res;
  EquivalenceShift& s = res.shift;
  s.K = K;
  s.Y = schouten(first_operator(d.eta_inv), K);
  require_degree_shift(s.Y);
  DiffPoly dzK = delta_Z(K);
  if (!is_exact(dzK)) throw NotExact("delta_Z K is not a total derivative");
  s.g = integrate(dzK);
  EvolutionaryDerivation DY(s.Y);
  s.G = truncate(s.g, D);
  DiffPoly term = s.G;
  Rational fact = 1;
  for (int i = 2; !term.is_zero(); ++i) {
    term = truncate(DY(term), D);
    fact *= i;
    s.G += Rational(1) / fact * term;
  }

  DeformedData& hat = res.hat;
  hat.n = n;
  hat.pmax = d.pmax - 1;
  hat.dmax = D;
  hat.eta = d.eta;
  hat.eta_inv = d.eta_inv;
  hat.Z = d.Z;
  hat.P1 = miura_exp(s.Y, d.P1, 1 + D);

  // H^_{a,p} = e^{ad_Y} H~_{a,p} and X^_{a,p} = -[P^1, H^_{a,p}].
  Grid grid{n, -1, d.pmax};
  std::vector<LocalFunctional> H(grid.size(), LocalFunctional(n));
  std::vector<std::vector<DiffPoly>> Xc(grid.size());
  parallel_for(grid.size(), [&](std::size_t k) {
    H[k] = miura_exp(s.Y, LocalFunctional(d(grid.a(k), grid.p(k))), D);
    EvolutionaryDerivation DX(truncate(Rational(-1) * schouten(hat.P1, H[k]), 1 + D));
    for (int g = 0; g < n; ++g) Xc[k].push_back(DX(coord(n, g)));
  });
  auto at = [&](int a, int p) { return static_cast<std::size_t>(a) * (d.pmax + 2) + (p + 1); };
  auto flow = [&](int a, int p, const DiffPoly& x, int deg) {
    return truncate(EvolutionaryDerivation::from_components(Xc[at(a, p)])(truncate(x, deg)), deg);
  };

  hat.h.assign(n, {});
  for (int a = 0; a < n; ++a)
    for (int p = -1; p <= hat.pmax; ++p)
      hat.h[a].push_back(truncate(exp_derivation(s.Y, d(a, p), D) + total_derivative(flow(a, p + 1, s.G, D)), D));

  Report& r = res.report;
  r.add("shift_KZ_commute", schouten(K, d.Z).is_zero(), 0, "[K,Z] = 0");
  r.add("shift_YZ_commute", schouten(s.Y, d.Z).is_zero(), 0, "[Y,Z] = 0");
  r.add("shift_g", total_derivative(s.g) == dzK, 0, "d g = delta_Z K");

  std::vector<std::string> func, var, unit;
  bool var_h_input = true;
  for (int a = 0; a < n && var_h_input; ++a)
    for (int p = -1; p <= hat.pmax; ++p)
      if (truncate(delta_Z(LocalFunctional(d(a, p + 1))), D) != d(a, p)) var_h_input = false;
  for (int a = 0; a < n; ++a)
    for (int p = -1; p <= hat.pmax; ++p) {
      if (LocalFunctional(hat(a, p)) != truncate(H[at(a, p)], D)) func.push_back(cell_label(a, p, 0, 0));
      if (var_h_input && truncate(delta_Z(H[at(a, p + 1)]), D) != hat(a, p)) var.push_back(cell_label(a, p, 0, 0));
    }
  for (int g = 0; g < n; ++g)
    if (Xc[at(0, 0)][g] != DiffPoly::variable(n, u(g + 1, 1))) unit.push_back(cell_label(0, 0, g, 0));
  add_cells(r, "shift_density_functional", func, "int h^ = e^{ad_Y} H~, " + degree_ctx(D));
  add_cells(r, "shift_density_variational", var,
            var_h_input ? "h^_{a,p} = delta_Z e^{ad_Y} H~_{a,p+1}, " + degree_ctx(D)
                        : "not applicable: input densities are not delta_Z H~_{a,p+1}");
  add_cells(r, "shift_unit_flow", unit, "d^_{1,0} = d");

  res.omega_tilde = build_omega_deformed(d, omega);
  res.omega_hat = build_omega_deformed(hat, omega);
  const DeformedOmega& ot = res.omega_tilde;
  const DeformedOmega& oh = res.omega_hat;
  std::vector<std::string> om_fail(oh.omega.size());
  parallel_for(oh.omega.size(), [&](std::size_t k) {
    const int P = oh.pmax;
    int q = static_cast<int>(k % (P + 1)), b = static_cast<int>(k / (P + 1) % n);
    int p = static_cast<int>(k / (P + 1) / n % (P + 1)), a = static_cast<int>(k / (P + 1) / n / (P + 1));
    DiffPoly rhs = exp_derivation(s.Y, ot(a, p, b, q), D) + flow(a, p, flow(b, q, s.G, D), D);
    if (truncate(rhs, D) != oh.omega[k]) om_fail[k] = cell_label(a, p, b, q);
  });
  add_cells(r, "shift_omega", om_fail, "Omega^ = e^{D_Y} Omega~ + d^ d^ G, " + degree_ctx(D));
  return res;
}

Report check_semi_hamiltonian(const std::vector<VelocitySample>& samples, double tol) {
  double tsarev = 0, min_diag = INFINITY, offdiag = 0;
  int worst = -1;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto& A = samples[s].A;
    const int n = static_cast<int>(A.size());
    offdiag = std::max(offdiag, samples[s].offdiag);
    double scale = 1;
    for (const auto& a : A) scale = std::max(scale, std::fabs(a.value()));
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (std::fabs(A[i].value() - A[j].value()) <= 1e-12 * scale)
          throw CoincidingVelocities("A^" + std::to_string(i + 1) + " = A^" + std::to_string(j + 1) + " at sample " +
                                     std::to_string(s));
    for (int i = 0; i < n; ++i) {
      min_diag = std::min(min_diag, std::fabs(A[i].derivative(i).value()));
      for (int j = 0; j < n; ++j)
        for (int k = j + 1; k < n; ++k) {
          if (j == i || k == i) continue;
          Series lhs = (A[i].derivative(j) / (A[j] - A[i])).derivative(k);
          Series rhs = (A[i].derivative(k) / (A[k] - A[i])).derivative(j);
          double res = std::fabs(lhs.value() - rhs.value());
          if (res > tsarev) {
            tsarev = res;
            worst = static_cast<int>(s);
          }
        }
    }
  }
  Report r;
  char tol_text[32];
  std::snprintf(tol_text, sizeof tol_text, "%g", tol);
  std::string ctx = std::to_string(samples.size()) + " samples, tol " + tol_text;
  if (worst >= 0) ctx += ", worst sample " + std::to_string(worst);
  r.add("tsarev", tsarev < tol, tsarev, ctx);
  if (samples.empty()) min_diag = 0;
  r.add("diagonal_form", offdiag < tol, offdiag, "off-diagonal velocity entries in canonical coordinates");
  r.add("nondegenerate", min_diag > 1e-10, min_diag, "min |d_i A^i| over samples");
  return r;
}

VelocitySample principal_velocities(const PencilChart& chart, const DensityTable& h, int a, int p) {
  const int n = h.n;
  std::vector<std::vector<CoeffPoly>> V(n, std::vector<CoeffPoly>(n, CoeffPoly(n)));
  const CoeffPoly& hp = h(a, p);
  for (int b = 0; b < n; ++b)
    for (int c = 0; c < n; ++c) {
      CoeffPoly hess = hp.derivative(b).derivative(c);
      for (int g = 0; g < n; ++g)
        if (h.eta_inv[g][b] != 0) V[g][c] += h.eta_inv[g][b] * hess;
    }
  DiagonalVelocities dv = diagonal_velocities(chart, V);
  return {dv.A, dv.offdiag};
}

}  // namespace taucover
