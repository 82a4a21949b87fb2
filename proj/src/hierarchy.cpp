#include "taucover/hierarchy.hpp"

#include <sstream>

#include "taucover/brackets.hpp"
#include "taucover/errors.hpp"
#include "taucover/pencil.hpp"

namespace taucover {

namespace {

using Tensor3 = std::vector<std::vector<std::vector<CoeffPoly>>>;

RatMatrix identity_matrix(int n) {
  RatMatrix m(n, std::vector<Rational>(n, 0));
  for (int i = 0; i < n; ++i) m[i][i] = 1;
  return m;
}

RatMatrix matmul(const RatMatrix& a, const RatMatrix& b) {
  const int n = static_cast<int>(a.size());
  RatMatrix r(n, std::vector<Rational>(n, 0));
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      if (a[i][k] != 0)
        for (int j = 0; j < n; ++j) r[i][j] += a[i][k] * b[k][j];
  return r;
}

RatMatrix transpose(const RatMatrix& a) {
  const int n = static_cast<int>(a.size());
  RatMatrix r(n, std::vector<Rational>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r[i][j] = a[j][i];
  return r;
}

std::vector<CoeffPoly> gradient(const CoeffPoly& p) {
  std::vector<CoeffPoly> g;
  for (int i = 0; i < p.dim(); ++i) g.push_back(p.derivative(i));
  return g;
}

// a^T eta^{-1} b for gradient vectors.
CoeffPoly pair(const std::vector<CoeffPoly>& a, const RatMatrix& eta_inv, const std::vector<CoeffPoly>& b) {
  const int n = static_cast<int>(a.size());
  CoeffPoly r(n);
  for (int x = 0; x < n; ++x)
    for (int z = 0; z < n; ++z)
      if (eta_inv[x][z] != 0 && !a[x].is_zero() && !b[z].is_zero()) r += eta_inv[x][z] * (a[x] * b[z]);
  return r;
}

DiffPoly coord(int n, int g) { return DiffPoly::variable(n, v(g + 1)); }

}  // namespace

CalibrationChange CalibrationChange::identity(int n, int order) {
  CalibrationChange c;
  c.C.assign(order + 1, RatMatrix(n, std::vector<Rational>(n, 0)));
  c.C[0] = identity_matrix(n);
  return c;
}

CalibrationChange CalibrationChange::exponential(const RatMatrix& A, int order) {
  const int n = static_cast<int>(A.size());
  CalibrationChange c = identity(n, order);
  RatMatrix power = identity_matrix(n);
  Rational fact = 1;
  for (int k = 1; k <= order; ++k) {
    power = matmul(power, A);
    fact *= k;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) c.C[k][i][j] = power[i][j] / fact;
  }
  return c;
}

namespace {

// c_{ab}^z = c_{abx} eta^{xz}
Tensor3 raise_last(const FrobeniusData& d) {
  const int n = d.n;
  Tensor3 r(n, std::vector<std::vector<CoeffPoly>>(n, std::vector<CoeffPoly>(n, CoeffPoly(n))));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int z = 0; z < n; ++z)
        for (int x = 0; x < n; ++x)
          if (d.eta_inv[x][z] != 0) r[a][b][z] += d.eta_inv[x][z] * d.c[a][b][x];
  return r;
}

std::vector<std::vector<CoeffPoly>> recursion_hessian(const Tensor3& cup, const CoeffPoly& prev) {
  const int n = prev.dim();
  std::vector<CoeffPoly> grad = gradient(prev);
  std::vector<std::vector<CoeffPoly>> H(n, std::vector<CoeffPoly>(n, CoeffPoly(n)));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int z = 0; z < n; ++z)
        if (!grad[z].is_zero() && !cup[a][b][z].is_zero()) H[a][b] += cup[a][b][z] * grad[z];
  return H;
}

}  // namespace

ThetaTable build_theta(const FrobeniusData& d, int pmax) {
  const int n = d.n;
  ThetaTable t;
  t.n = n;
  t.depth = 2 * pmax + 2;
  t.eta = d.eta;
  t.eta_inv = d.eta_inv;
  t.theta.assign(n, {});
  Tensor3 cup = raise_last(d);
  for (int a = 0; a < n; ++a) {
    CoeffPoly t0(n);
    for (int b = 0; b < n; ++b) t0 += d.eta[a][b] * CoeffPoly::variable(n, b);
    t.theta[a].push_back(t0);
    t.theta[a].push_back(d.F.derivative(a));
    for (int p = 1; p < t.depth; ++p) {
      auto H = recursion_hessian(cup, t.theta[a][p]);
      for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
          for (int w = 0; w < n; ++w)
            if (H[x][y].derivative(w) != H[w][y].derivative(x))
              throw RecursionInconsistent("mixed partials of theta_{" + std::to_string(a + 1) + "," +
                                          std::to_string(p + 1) + "} disagree");
      t.theta[a].push_back(integrate_hessian(H));
    }
  }
  if (!check_theta_recursion(d, t)) throw RecursionInconsistent("theta_{a,1} = dF/dv^a violates the recursion");
  normalize_theta(t);
  return t;
}

bool check_theta_recursion(const FrobeniusData& d, const ThetaTable& t) {
  Tensor3 cup = raise_last(d);
  for (int a = 0; a < t.n; ++a)
    for (int p = 0; p < t.depth; ++p) {
      auto H = recursion_hessian(cup, t.theta[a][p]);
      for (int x = 0; x < t.n; ++x)
        for (int y = 0; y < t.n; ++y)
          if (t.theta[a][p + 1].derivative(x).derivative(y) != H[x][y]) return false;
    }
  return true;
}

std::vector<std::vector<std::vector<CoeffPoly>>> normalization_defect(const ThetaTable& t) {
  const int n = t.n;
  std::vector<std::vector<std::vector<CoeffPoly>>> N;
  std::vector<std::vector<std::vector<CoeffPoly>>> grads(n);
  for (int a = 0; a < n; ++a)
    for (int p = 0; p <= t.depth; ++p) grads[a].push_back(gradient(t.theta[a][p]));
  for (int k = 1; k <= t.depth; ++k) {
    std::vector<std::vector<CoeffPoly>> Nk(n, std::vector<CoeffPoly>(n, CoeffPoly(n)));
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int p = 0; p <= k; ++p) {
          CoeffPoly term = pair(grads[a][p], t.eta_inv, grads[b][k - p]);
          if ((k - p) % 2) Nk[a][b] -= term;
          else Nk[a][b] += term;
        }
    N.push_back(Nk);
  }
  return N;
}

namespace {

bool orthogonal(const RatMatrix& eta, const std::vector<RatMatrix>& C, int order) {
  const int n = static_cast<int>(eta.size());
  auto at = [&](int k) { return k < static_cast<int>(C.size()) ? C[k] : RatMatrix(n, std::vector<Rational>(n, 0)); };
  for (int k = 1; k <= order; ++k) {
    RatMatrix s(n, std::vector<Rational>(n, 0));
    for (int i = 0; i <= k; ++i) {
      RatMatrix term = matmul(matmul(transpose(at(i)), eta), at(k - i));
      Rational sign = (k - i) % 2 ? -1 : 1;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) s[a][b] += sign * term[a][b];
    }
    for (const auto& row : s)
      for (const auto& x : row)
        if (x != 0) return false;
  }
  return true;
}

ThetaTable mix(const ThetaTable& t, const CalibrationChange& c) {
  ThetaTable r = t;
  const int n = t.n;
  for (int a = 0; a < n; ++a)
    for (int p = 0; p <= t.depth; ++p) {
      CoeffPoly s(n);
      for (int j = 0; j <= p && j < static_cast<int>(c.C.size()); ++j)
        for (int b = 0; b < n; ++b)
          if (c.C[j][b][a] != 0) s += c.C[j][b][a] * t.theta[b][p - j];
      if (a < static_cast<int>(c.shift.size()) && p < static_cast<int>(c.shift[a].size()))
        s += CoeffPoly::constant(n, c.shift[a][p]);
      r.theta[a][p] = s;
    }
  return r;
}

}  // namespace

CalibrationChange normalize_theta(ThetaTable& t) {
  const int n = t.n;
  CalibrationChange total = CalibrationChange::identity(n, t.depth);
  for (int k = 1; k <= t.depth; ++k) {
    auto N = normalization_defect(t)[k - 1];
    bool zero = true;
    RatMatrix Nk(n, std::vector<Rational>(n, 0));
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        if (!N[a][b].is_constant())
          throw RecursionInconsistent("normalization defect at order " + std::to_string(k) + " is not constant");
        Nk[a][b] = N[a][b].constant_term();
        zero = zero && Nk[a][b] == 0;
      }
    if (zero) continue;
    // C = 1 + A z^k with A = -(-1)^k eta^{-1} N_k / 2 removes the order-k defect.
    RatMatrix A = matmul(t.eta_inv, Nk);
    Rational f = k % 2 ? make_rational(1, 2) : make_rational(-1, 2);
    CalibrationChange step = CalibrationChange::identity(n, t.depth);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) step.C[k][a][b] = f * A[a][b];
    t = mix(t, step);
    CalibrationChange acc = CalibrationChange::identity(n, t.depth);
    for (int m = 0; m <= t.depth; ++m)
      for (int j = 0; j <= m; ++j) {
        RatMatrix prod = matmul(total.C[j], step.C[m - j]);
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) acc.C[m][a][b] += (m == 0 ? 0 : prod[a][b]);
      }
    acc.C[0] = identity_matrix(n);
    total = acc;
  }
  return total;
}

ThetaTable apply_calibration_change(const ThetaTable& t, const CalibrationChange& c) {
  if (c.C.empty() || c.C[0] != identity_matrix(t.n)) throw OrthogonalityViolation("C(0) must be the identity");
  if (!orthogonal(t.eta, c.C, t.depth)) throw OrthogonalityViolation("C^T(z) eta C(-z) != eta");
  return mix(t, c);
}

DensityTable build_h(const ThetaTable& t) {
  DensityTable h;
  h.n = t.n;
  h.pmax = t.depth - 2;
  h.eta = t.eta;
  h.eta_inv = t.eta_inv;
  h.h.assign(t.n, {});
  for (int a = 0; a < t.n; ++a)
    for (int p = -1; p <= h.pmax; ++p) h.h[a].push_back(t.theta[a][p + 2].derivative(0));
  return h;
}

FlowTable build_flows(const DensityTable& h) {
  const int n = h.n;
  FlowTable f;
  f.n = n;
  f.pmax = h.pmax;
  f.rhs.assign(n, {});
  for (int a = 0; a < n; ++a)
    for (int p = 0; p <= h.pmax; ++p) {
      std::vector<DiffPoly> comp;
      std::vector<CoeffPoly> grad = gradient(h(a, p));
      for (int g = 0; g < n; ++g) {
        DiffPoly s(n);
        for (int l = 0; l < n; ++l) {
          if (h.eta_inv[g][l] == 0) continue;
          for (int m = 0; m < n; ++m) {
            CoeffPoly c = grad[l].derivative(m);
            if (!c.is_zero()) s += (h.eta_inv[g][l] * DiffPoly::from_coeff(c)) * DiffPoly::variable(n, u(m + 1, 1));
          }
        }
        comp.push_back(s);
      }
      f.rhs[a].push_back(comp);
    }
  return f;
}

OmegaTable build_omega(const ThetaTable& t) { return build_omega(build_h(t)); }

OmegaTable build_omega(const DensityTable& h) {
  const int n = h.n;
  // Omega_{p,q} needs S_{a,b} with a + b <= 2 pmax + 1, i.e. h up to index 2 pmax.
  const int pmax = h.pmax / 2;
  OmegaTable om;
  om.n = n;
  om.pmax = pmax;
  om.eta = h.eta;
  om.omega.assign(static_cast<std::size_t>(n) * n * (pmax + 1) * (pmax + 1), CoeffPoly(n));
  const int top = 2 * pmax + 1;
  std::vector<std::vector<std::vector<CoeffPoly>>> grads(n);
  for (int a = 0; a < n; ++a)
    for (int p = -1; p < top; ++p) grads[a].push_back(gradient(h(a, p)));
  std::vector<std::string> failures(static_cast<std::size_t>(n) * n);
  parallel_for(static_cast<std::size_t>(n) * n, [&](std::size_t cellidx) {
    int a = static_cast<int>(cellidx) / n, b = static_cast<int>(cellidx) % n;
    // S[i][j], coefficient of z1^i z2^j, i + j <= top
    std::vector<std::vector<CoeffPoly>> S(top + 1);
    for (int i = 0; i <= top; ++i)
      for (int j = 0; i + j <= top; ++j) {
        CoeffPoly s = pair(grads[a][i], h.eta_inv, grads[b][j]);
        if (i == 0 && j == 0) s -= CoeffPoly::constant(n, h.eta[a][b]);
        S[i].push_back(s);
      }
    // Omega_{p,q} for p + q <= top - 1, solved along anti-diagonals.
    std::vector<std::vector<CoeffPoly>> W(top, std::vector<CoeffPoly>(top, CoeffPoly(n)));
    for (int p = 0; p < top; ++p)
      for (int q = 0; p + q < top; ++q) {
        CoeffPoly s(n);
        for (int k = 0; k <= q; ++k) {
          if (k % 2) s -= S[p + 1 + k][q - k];
          else s += S[p + 1 + k][q - k];
        }
        W[p][q] = s;
      }
    for (int i = 0; i <= top; ++i)
      for (int j = 0; i + j <= top; ++j) {
        CoeffPoly rhs(n);
        if (i > 0 && j < top) rhs += W[i - 1][j];
        if (j > 0 && i < top) rhs += W[i][j - 1];
        if (S[i][j] != rhs) {
          failures[cellidx] = cell_label(a, i, b, j);
          return;
        }
      }
    for (int p = 0; p <= pmax; ++p)
      for (int q = 0; q <= pmax; ++q) om(a, p, b, q) = W[p][q];
  });
  for (const auto& f : failures)
    if (!f.empty()) throw DivisionMismatch("generating series not divisible by z1 + z2 at " + f);
  return om;
}

DiffPoly apply_flow(const FlowTable& flows, int a, int p, const DiffPoly& x) {
  return EvolutionaryDerivation::from_components(flows(a, p))(x);
}

Report verify_tau_structure(const OmegaTable& om, const DensityTable& h, const FlowTable& flows) {
  const int n = om.n, P = std::min(om.pmax, flows.pmax);
  std::size_t cells = static_cast<std::size_t>(n) * n * (P + 1) * (P + 1);
  std::vector<std::string> fail_d(cells), fail_sym(cells), fail_norm(cells);
  parallel_for(cells, [&](std::size_t k) {
    int q = static_cast<int>(k % (P + 1)), b = static_cast<int>(k / (P + 1) % n);
    int p = static_cast<int>(k / (P + 1) / n % (P + 1)), a = static_cast<int>(k / (P + 1) / n / (P + 1));
    DiffPoly lhs = total_derivative(DiffPoly::from_coeff(om(a, p, b, q)));
    if (lhs != apply_flow(flows, b, q, DiffPoly::from_coeff(h(a, p - 1)))) fail_d[k] = cell_label(a, p, b, q);
    if (om(a, p, b, q) != om(b, q, a, p)) fail_sym[k] = cell_label(a, p, b, q);
    if (b == 0 && q == 0 && om(a, p, 0, 0) != h(a, p - 1)) fail_norm[k] = cell_label(a, p, b, q);
  });
  Report r;
  std::string ctx = "p,q <= " + std::to_string(P);
  add_cells(r, "omega_derivative", fail_d, ctx);
  add_cells(r, "omega_symmetry", fail_sym, ctx);
  add_cells(r, "omega_normalization", fail_norm, ctx);
  return r;
}

Report verify_tau_symmetry(const FlowTable& flows, const DensityTable& h, int pmax) {
  const int n = flows.n;
  std::size_t cells = static_cast<std::size_t>(n) * n * (pmax + 1) * (pmax + 1);
  std::vector<std::string> fail(cells);
  parallel_for(cells, [&](std::size_t k) {
    int q = static_cast<int>(k % (pmax + 1)), b = static_cast<int>(k / (pmax + 1) % n);
    int p = static_cast<int>(k / (pmax + 1) / n % (pmax + 1)), a = static_cast<int>(k / (pmax + 1) / n / (pmax + 1));
    DiffPoly l = apply_flow(flows, b, q, DiffPoly::from_coeff(h(a, p - 1)));
    DiffPoly r = apply_flow(flows, a, p, DiffPoly::from_coeff(h(b, q - 1)));
    if (l != r) fail[k] = cell_label(a, p, b, q);
  });
  Report r;
  add_cells(r, "tau_symmetry", fail, "p,q <= " + std::to_string(pmax));
  return r;
}

Report verify_commutativity(const FlowTable& flows, int pmax) {
  const int n = flows.n;
  std::size_t cells = static_cast<std::size_t>(n) * n * (pmax + 1) * (pmax + 1);
  std::vector<std::string> fail(cells);
  parallel_for(cells, [&](std::size_t k) {
    int q = static_cast<int>(k % (pmax + 1)), b = static_cast<int>(k / (pmax + 1) % n);
    int p = static_cast<int>(k / (pmax + 1) / n % (pmax + 1)), a = static_cast<int>(k / (pmax + 1) / n / (pmax + 1));
    if (std::make_pair(a, p) >= std::make_pair(b, q)) return;
    auto Da = EvolutionaryDerivation::from_components(flows(a, p));
    auto Db = EvolutionaryDerivation::from_components(flows(b, q));
    for (int g = 0; g < n; ++g)
      if (Da(flows(b, q)[g]) != Db(flows(a, p)[g])) {
        fail[k] = cell_label(a, p, b, q);
        return;
      }
  });
  Report r;
  add_cells(r, "commutativity", fail, "p,q <= " + std::to_string(pmax));
  return r;
}

Report galilean_check(const OmegaTable& om, const FlowTable& flows) {
  const int n = om.n, P = om.pmax;
  std::vector<std::string> fail_a, fail_b;
  for (int a = 0; a < n; ++a)
    for (int p = 0; p <= P; ++p)
      for (int b = 0; b < n; ++b)
        for (int q = 0; q <= P; ++q) {
          CoeffPoly rhs(n);
          if (p > 0) rhs += om(a, p - 1, b, q);
          if (q > 0) rhs += om(a, p, b, q - 1);
          if (p == 0 && q == 0) rhs += CoeffPoly::constant(n, om.eta[a][b]);
          if (om(a, p, b, q).derivative(0) != rhs) fail_a.push_back(cell_label(a, p, b, q));
        }
  EvolutionaryDerivation DZ(LocalFunctional(DiffPoly::variable(n, theta(1))));
  for (int b = 0; b < n; ++b)
    for (int q = 0; q <= flows.pmax; ++q)
      for (int g = 0; g < n; ++g) {
        // [D_Z, d_{b,q}] v^g = D_Z(flow^g) - d_{b,q}(delta^g_1)
        DiffPoly comm = DZ(flows(b, q)[g]) - apply_flow(flows, b, q, DZ(coord(n, g)));
        DiffPoly expected = q > 0 ? flows(b, q - 1)[g] : DiffPoly(n);
        if (comm != expected) fail_b.push_back(cell_label(b, q, g, 0));
      }
  Report r;
  add_cells(r, "galilean_omega_shift", fail_a, "p,q <= " + std::to_string(P));
  add_cells(r, "galilean_DZ_intertwining", fail_b, "q <= " + std::to_string(flows.pmax));
  return r;
}

Report verify_hamiltonian_flows(const DensityTable& h, const FlowTable& flows, int pmax) {
  const int n = h.n;
  LocalFunctional P1 = poisson_operator(HydroMetric::constant(h.eta_inv));
  std::vector<std::string> fail(static_cast<std::size_t>(n) * (pmax + 1)), fail_norm;
  parallel_for(fail.size(), [&](std::size_t k) {
    int a = static_cast<int>(k) / (pmax + 1), p = static_cast<int>(k) % (pmax + 1);
    LocalFunctional X = Rational(-1) * schouten(P1, LocalFunctional(DiffPoly::from_coeff(h(a, p))));
    EvolutionaryDerivation DX(X);
    for (int g = 0; g < n; ++g)
      if (DX(coord(n, g)) != flows(a, p)[g]) {
        fail[k] = cell_label(a, p, g, 0);
        return;
      }
  });
  for (int g = 0; g < n; ++g)
    if (flows(0, 0)[g] != DiffPoly::variable(n, u(g + 1, 1))) fail_norm.push_back(cell_label(0, 0, g, 0));
  Report r;
  add_cells(r, "hamiltonian_flows", fail, "X = -[P1, H], p <= " + std::to_string(pmax));
  add_cells(r, "flow_normalization", fail_norm, "d/dt^{1,0} = d/dx");
  return r;
}

Report verify_bihamiltonian_conservation(const LocalFunctional& P1, const LocalFunctional& P2, const DensityTable& h,
                                         int pmax) {
  const int n = h.n;
  std::vector<std::string> fail(static_cast<std::size_t>(n) * (pmax + 1));
  parallel_for(fail.size(), [&](std::size_t k) {
    int a = static_cast<int>(k) / (pmax + 1), p = static_cast<int>(k) % (pmax + 1);
    LocalFunctional X = schouten(P1, LocalFunctional(DiffPoly::from_coeff(h(a, p))));
    if (!schouten(P2, X).is_zero()) fail[k] = cell_label(a, p, 0, 0);
  });
  Report r;
  add_cells(r, "bihamiltonian_conservation", fail, "[P2,[P1,H]] = 0, p <= " + std::to_string(pmax));
  return r;
}

}  // namespace taucover
