#include "taucover/frobenius.hpp"

#include <cmath>
#include <complex>

#include "taucover/errors.hpp"

namespace taucover {

namespace {

std::string idx(std::initializer_list<int> is) {
  std::string s;
  for (int i : is) s += std::to_string(i + 1);
  return s;
}

}  // namespace

CoeffPoly FrobeniusData::c_up(int a, int b, int cc) const {
  CoeffPoly r(n);
  for (int d = 0; d < n; ++d)
    if (eta_inv[a][d] != 0) r += eta_inv[a][d] * c[d][b][cc];
  return r;
}

FrobeniusData analyze(const WDVVPotential& pot) {
  FrobeniusData d;
  const int n = d.n = pot.n;
  if (pot.F.dim() != n) throw DimensionMismatch("potential dimension");
  d.F = pot.F.without_degree_at_most(2);
  d.quadratic_dropped = d.F != pot.F;
  d.euler = pot.euler;
  if (d.euler && static_cast<int>(d.euler->coeffs.size()) != n) throw DimensionMismatch("Euler coefficients");

  d.c.assign(n, std::vector<std::vector<CoeffPoly>>(n, std::vector<CoeffPoly>(n, CoeffPoly(n))));
  for (int a = 0; a < n; ++a) {
    CoeffPoly fa = d.F.derivative(a);
    for (int b = 0; b < n; ++b) {
      CoeffPoly fab = fa.derivative(b);
      for (int c = 0; c < n; ++c) d.c[a][b][c] = fab.derivative(c);
    }
  }
  d.eta.assign(n, std::vector<Rational>(n, 0));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      if (!d.c[0][a][b].is_constant())
        throw NotWDVV("c_{1" + idx({a, b}) + "} is not constant: " + d.c[0][a][b].str());
      d.eta[a][b] = d.c[0][a][b].constant_term();
    }
  auto inv = inverse(d.eta);
  if (!inv) throw NotWDVV("eta = c_{1ab} is degenerate");
  d.eta_inv = *inv;

  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        if (d.c[a][b][c] != d.c[b][a][c] || d.c[a][b][c] != d.c[a][c][b])
          throw NotWDVV("c_{" + idx({a, b, c}) + "} is not symmetric");
        for (int x = 0; x < n; ++x)
          if (d.c[a][b][c].derivative(x) != d.c[x][b][c].derivative(a))
            throw NotWDVV("integrability fails for c_{" + idx({a, b, c}) + "} and index " + idx({x}));
      }
  // c_{ab x} eta^{xz} c_{z g dl} = c_{dl b x} eta^{xz} c_{z g a}
  std::vector<std::vector<std::vector<CoeffPoly>>> cup(n, std::vector<std::vector<CoeffPoly>>(n));
  for (int z = 0; z < n; ++z)
    for (int g = 0; g < n; ++g)
      for (int dl = 0; dl < n; ++dl) cup[z][g].push_back(d.c_up(z, g, dl));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int g = 0; g < n; ++g)
        for (int dl = 0; dl < n; ++dl) {
          CoeffPoly lhs(n), rhs(n);
          for (int x = 0; x < n; ++x) {
            lhs += d.c[a][b][x] * cup[x][g][dl];
            rhs += d.c[dl][b][x] * cup[x][g][a];
          }
          if (lhs != rhs) throw NotWDVV("associativity fails for (" + idx({a, b, g, dl}) + ")");
        }
  return d;
}

std::pair<HydroMetric, HydroMetric> pencil_from_frobenius(const FrobeniusData& d) {
  if (!d.euler) throw MissingEuler("potential has no Euler data");
  const int n = d.n;
  HydroMetric g1 = HydroMetric::constant(d.eta_inv);
  HydroMetric g2(n);
  std::vector<CoeffPoly> E;
  for (int e = 0; e < n; ++e) E.push_back(d.euler->coeffs[e] * CoeffPoly::variable(n, e));
  // c^{ab}_c = eta^{am} c^b_{mc}
  std::vector<std::vector<std::vector<CoeffPoly>>> cab(n, std::vector<std::vector<CoeffPoly>>(n));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        CoeffPoly s(n);
        for (int m = 0; m < n; ++m)
          if (d.eta_inv[a][m] != 0) s += d.eta_inv[a][m] * d.c_up(b, m, c);
        cab[a][b].push_back(s);
      }
  Rational charge = 3 - d.euler->weight;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      for (int e = 0; e < n; ++e) g2.g[a][b] += E[e] * cab[a][b][e];
      Rational q_b = 1 - d.euler->coeffs[b];
      for (int c = 0; c < n; ++c) g2.gamma[a][b][c] = ((charge + 1) / 2 - q_b) * cab[a][b][c];
    }
  if (determinant(g2.g).is_zero()) throw DegenerateMetric("det g2 vanishes identically");
  return {g1, g2};
}

Point LegendreData::map(const Point& v) const {
  Point r;
  for (const auto& p : vhat_of_v) r.push_back(p.eval(v));
  return r;
}

Matrix LegendreData::hessian_hat(const Point& vhat) const {
  Point dv(n);
  for (int a = 0; a < n; ++a) dv[a] = vhat[a] - to_double(base_hat[a]);
  Matrix h(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) h(a, b) = F_hat.derivative(a).derivative(b).eval(dv);
  return h;
}

LegendreData legendre_transform(const FrobeniusData& d, const std::vector<Rational>& b,
                                const std::vector<Rational>& base, int order) {
  const int n = d.n;
  if (static_cast<int>(b.size()) != n || static_cast<int>(base.size()) != n)
    throw DimensionMismatch("Legendre data dimension");
  LegendreData L;
  L.n = n;
  L.order = order;
  L.base = base;
  L.unit = b;
  std::vector<std::vector<CoeffPoly>> H(n);
  for (int a = 0; a < n; ++a)
    for (int c = 0; c < n; ++c) H[a].push_back(d.F.derivative(a).derivative(c));
  // vhat^a = eta^{ab} b^g F_{gb}
  for (int a = 0; a < n; ++a) {
    CoeffPoly s(n);
    for (int bb = 0; bb < n; ++bb)
      for (int g = 0; g < n; ++g)
        if (d.eta_inv[a][bb] != 0 && b[g] != 0) s += (d.eta_inv[a][bb] * b[g]) * H[g][bb];
    L.vhat_of_v.push_back(s);
    L.base_hat.push_back(s.eval(base));
  }
  // Shift to the base point: P_a(dv) = vhat^a(v0 + dv) - vhat0^a.
  std::vector<CoeffPoly> shift;
  for (int a = 0; a < n; ++a) shift.push_back(CoeffPoly::constant(n, base[a]) + CoeffPoly::variable(n, a));
  std::vector<CoeffPoly> P;
  RatMatrix lin(n, std::vector<Rational>(n, 0));
  for (int a = 0; a < n; ++a) {
    P.push_back(compose(L.vhat_of_v[a], shift) - CoeffPoly::constant(n, L.base_hat[a]));
    for (int c = 0; c < n; ++c) {
      CoeffPoly::Exponents e(n, 0);
      e[c] = 1;
      lin[a][c] = P[a].coeff(e);
    }
  }
  auto linv = inverse(lin);
  if (!linv) throw NonInvertibleB("b^g c_{gab} is singular at the base point");
  std::vector<CoeffPoly> dv(n, CoeffPoly(n)), dvhat;
  for (int a = 0; a < n; ++a) dvhat.push_back(CoeffPoly::variable(n, a));
  for (int a = 0; a < n; ++a)
    for (int c = 0; c < n; ++c) dv[a] += (*linv)[a][c] * dvhat[c];
  for (int it = 0; it < order; ++it) {
    std::vector<CoeffPoly> res;
    for (int c = 0; c < n; ++c) res.push_back(compose(P[c], dv, order) - dvhat[c]);
    for (int a = 0; a < n; ++a)
      for (int c = 0; c < n; ++c)
        if ((*linv)[a][c] != 0) dv[a] = truncate(dv[a] - (*linv)[a][c] * res[c], order);
  }
  L.v_of_vhat = dv;
  std::vector<CoeffPoly> vfull;
  for (int a = 0; a < n; ++a) vfull.push_back(CoeffPoly::constant(n, base[a]) + dv[a]);
  std::vector<std::vector<CoeffPoly>> Hhat(n);
  for (int a = 0; a < n; ++a)
    for (int c = 0; c < n; ++c) Hhat[a].push_back(compose(H[a][c], vfull, order));
  L.F_hat = integrate_hessian(Hhat);
  return L;
}

double quasihomogeneity_check(const CoeffPoly& F, const std::vector<Rational>& euler, const Rational& weight) {
  const int n = F.dim();
  if (static_cast<int>(euler.size()) != n) throw DimensionMismatch("Euler coefficients");
  CoeffPoly R(n);
  for (const auto& [e, c] : F.terms()) {
    Rational w = 0;
    for (int a = 0; a < n; ++a) w += euler[a] * e[a];
    R.add_term(e, (w - weight) * c);
  }
  double worst = 0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        worst = std::max(worst, R.derivative(a).derivative(b).derivative(c).max_abs_coeff());
  return worst;
}

CMatrix psi_at(const FrobeniusData& d, const PencilChart& chart) {
  if (chart.n != d.n) throw DimensionMismatch("chart dimension");
  CMatrix psi(d.n, d.n);
  for (int i = 0; i < d.n; ++i) {
    std::complex<double> p1 = std::sqrt(std::complex<double>(1.0 / chart.f[i], 0.0));
    for (int a = 0; a < d.n; ++a) psi(i, a) = p1 * chart.du_dv(i, a);
  }
  return psi;
}

WDVVPotential kdv_potential() {
  WDVVPotential p;
  p.n = 1;
  p.F = CoeffPoly::monomial(1, {3}, make_rational(1, 6));
  p.euler = EulerData{{1}, 3};
  return p;
}

WDVVPotential a2_potential() {
  WDVVPotential p;
  p.n = 2;
  p.F = CoeffPoly::monomial(2, {2, 1}, make_rational(1, 2)) + CoeffPoly::monomial(2, {0, 4}, make_rational(1, 72));
  p.euler = EulerData{{1, make_rational(2, 3)}, make_rational(8, 3)};
  return p;
}

WDVVPotential a3_potential() {
  WDVVPotential p;
  p.n = 3;
  p.F = CoeffPoly::monomial(3, {2, 0, 1}, make_rational(1, 2)) + CoeffPoly::monomial(3, {1, 2, 0}, make_rational(1, 2)) +
        CoeffPoly::monomial(3, {0, 2, 2}, make_rational(1, 4)) + CoeffPoly::monomial(3, {0, 0, 5}, make_rational(1, 60));
  p.euler = EulerData{{1, make_rational(3, 4), make_rational(1, 2)}, make_rational(5, 2)};
  return p;
}

}  // namespace taucover
