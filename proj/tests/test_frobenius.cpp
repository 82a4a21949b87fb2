#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "taucover/brackets.hpp"
#include "taucover/errors.hpp"
#include "taucover/frobenius.hpp"

using namespace taucover;

namespace {

CoeffPoly poly(int n, const char* s) { return to_coeff(DiffPoly::parse(n, s)); }

// Brute-force associativity oracle: (e_a o e_b) o e_c = e_a o (e_b o e_c)
// evaluated numerically at a point, from third derivatives computed here.
double associativity_defect(const CoeffPoly& F, const Point& v) {
  const int n = F.dim();
  std::vector<std::vector<std::vector<double>>> c(n, std::vector<std::vector<double>>(n, std::vector<double>(n)));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int k = 0; k < n; ++k) c[a][b][k] = F.derivative(a).derivative(b).derivative(k).eval(v);
  Matrix eta(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) eta(a, b) = c[0][a][b];
  Matrix ei = eta.inverse();
  double worst = 0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int g = 0; g < n; ++g)
        for (int d = 0; d < n; ++d) {
          double l = 0, r = 0;
          for (int x = 0; x < n; ++x)
            for (int z = 0; z < n; ++z) {
              l += c[a][b][x] * ei(x, z) * c[z][g][d];
              r += c[d][b][x] * ei(x, z) * c[z][g][a];
            }
          worst = std::max(worst, std::fabs(l - r));
        }
  return worst;
}

}  // namespace

TEST_CASE("analyze examples") {
  FrobeniusData k = analyze(kdv_potential());
  CHECK(k.eta[0][0] == 1);
  CHECK(k.c[0][0][0] == CoeffPoly::constant(1, 1));
  CHECK_FALSE(k.quadratic_dropped);

  FrobeniusData a2 = analyze(a2_potential());
  CHECK(a2.eta == RatMatrix{{0, 1}, {1, 0}});
  CHECK(a2.c[1][1][1] == poly(2, "1/3*v2"));
  for (double x : {-1.0, 0.3, 2.0}) CHECK(associativity_defect(a2.F, {x, 1.3}) < 1e-12);

  CHECK_THROWS_AS(analyze({1, poly(1, "v1^4"), std::nullopt}), NotWDVV);
  // eta degenerate
  CHECK_THROWS_AS(analyze({2, poly(2, "1/6*v1^3 + v2^4"), std::nullopt}), NotWDVV);

  FrobeniusData a3 = analyze(a3_potential());
  CHECK(a3.eta == RatMatrix{{0, 0, 1}, {0, 1, 0}, {1, 0, 0}});
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> box(-2, 2);
  for (int t = 0; t < 5; ++t) CHECK(associativity_defect(a3.F, {box(rng), box(rng), box(rng)}) < 1e-10);
  WDVVPotential broken = a3_potential();
  broken.F += poly(3, "v2^4");
  CHECK(associativity_defect(broken.F, {0.2, 0.7, -0.4}) > 1e-3);
  CHECK_THROWS_AS(analyze(broken), NotWDVV);

  // quadratic terms are removed and reported
  WDVVPotential q = kdv_potential();
  q.F += poly(1, "3*v1^2 + v1");
  FrobeniusData qd = analyze(q);
  CHECK(qd.quadratic_dropped);
  CHECK(qd.F == kdv_potential().F);
}

TEST_CASE("pencil_from_frobenius") {
  auto [k1, k2] = pencil_from_frobenius(analyze(kdv_potential()));
  CHECK(k1.g[0][0] == CoeffPoly::constant(1, 1));
  CHECK(k2.g[0][0] == poly(1, "v1"));
  CHECK(k2.gamma[0][0][0] == CoeffPoly::constant(1, make_rational(1, 2)));
  LocalFunctional P1 = poisson_operator(k1), P2 = poisson_operator(k2);
  CHECK(is_exact_triple(P1, P2, LocalFunctional(DiffPoly::parse(1, "t1_0"))));
  CHECK(is_bihamiltonian(P1, P2));

  for (auto pot : {a2_potential(), a3_potential()}) {
    auto [g1, g2] = pencil_from_frobenius(analyze(pot));
    LocalFunctional Q1 = poisson_operator(g1), Q2 = poisson_operator(g2);
    CHECK(is_bihamiltonian(Q1, Q2));
    CHECK(is_exact_triple(Q1, Q2, LocalFunctional(DiffPoly::parse(pot.n, "t1_0"))));
  }
  auto [a1, a2] = pencil_from_frobenius(analyze(a2_potential()));
  CHECK(a2.g[0][0] == poly(2, "2/9*v2^2"));
  CHECK(a2.g[0][1] == poly(2, "v1"));
  CHECK(a2.g[1][1] == poly(2, "2/3*v2"));

  WDVVPotential none = a2_potential();
  none.euler.reset();
  CHECK_THROWS_AS(pencil_from_frobenius(analyze(none)), MissingEuler);
  WDVVPotential zero = a2_potential();
  zero.euler = EulerData{{0, 0}, 0};
  CHECK_THROWS_AS(pencil_from_frobenius(analyze(zero)), DegenerateMetric);
}

TEST_CASE("quasihomogeneity") {
  CHECK(quasihomogeneity_check(poly(1, "1/6*v1^3"), {1}, 3) == 0.0);
  CHECK(quasihomogeneity_check(a2_potential().F, {1, make_rational(2, 3)}, make_rational(8, 3)) == 0.0);
  CHECK(quasihomogeneity_check(a3_potential().F, a3_potential().euler->coeffs, make_rational(5, 2)) == 0.0);
  CHECK(quasihomogeneity_check(a2_potential().F, {1, make_rational(2, 3)}, 3) > 0.1);
}

TEST_CASE("legendre transform") {
  FrobeniusData k = analyze(kdv_potential());
  LegendreData lk = legendre_transform(k, {1}, {2});
  CHECK(lk.vhat_of_v[0] == poly(1, "v1"));
  CHECK(lk.F_hat.derivative(0).derivative(0).derivative(0) == CoeffPoly::constant(1, 1));

  FrobeniusData a2 = analyze(a2_potential());
  LegendreData id = legendre_transform(a2, {1, 0}, {0, 1});
  CHECK(id.vhat_of_v[0] == poly(2, "v1"));
  CHECK(id.vhat_of_v[1] == poly(2, "v2"));
  for (const auto& [e, c] : id.F_hat.terms()) CHECK(e[0] + e[1] <= 4);

  LegendreData L = legendre_transform(a2, {0, 1}, {make_rational(1, 2), 1});
  // Oracle: closed-form inverse v2 = sqrt(6 vhat^1), v1 = vhat^2.
  CHECK(L.vhat_of_v[0] == poly(2, "1/6*v2^2"));
  CHECK(L.vhat_of_v[1] == poly(2, "v1"));
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> d(-0.03, 0.03);
  for (int t = 0; t < 10; ++t) {
    Point v{0.5 + d(rng), 1.0 + d(rng)};
    Point vh = L.map(v);
    CHECK(std::sqrt(6 * vh[0]) == doctest::Approx(v[1]).epsilon(1e-13));
    Matrix h = L.hessian_hat(vh);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) CHECK(std::fabs(h(a, b) - a2.F.derivative(a).derivative(b).eval(v)) < 1e-8);
  }
  // New unit: b^g d/dvhat^g of the Hessian is eta, exactly through the truncation order.
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      CoeffPoly e = L.F_hat.derivative(a).derivative(b).derivative(1);
      CHECK(truncate(e, L.order - 1) == CoeffPoly::constant(2, a2.eta[a][b]));
    }
  CHECK_THROWS_AS(legendre_transform(a2, {0, 1}, {0, 0}), NonInvertibleB);
}

TEST_CASE("psi_at reconstructs eta and c") {
  FrobeniusData kdv = analyze(kdv_potential());
  auto [k1, k2] = pencil_from_frobenius(kdv);
  CHECK(psi_at(kdv, canonical_coordinates_at(k1, k2, {2.0}))(0, 0) == std::complex<double>(1, 0));

  for (auto pot : {a2_potential(), a3_potential()}) {
    FrobeniusData d = analyze(pot);
    auto [g1, g2] = pencil_from_frobenius(d);
    Point v = pot.n == 2 ? Point{0.3, 1.1} : Point{-0.360015, -0.431576, 1.05069};
    PencilChart c = canonical_coordinates_at(g1, g2, v);
    CMatrix psi = psi_at(d, c);
    const int n = pot.n;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        std::complex<double> s = 0;
        for (int i = 0; i < n; ++i) s += psi(i, a) * psi(i, b);
        CHECK(std::abs(s - to_double(d.eta[a][b])) < 1e-6);
        for (int g = 0; g < n; ++g) {
          std::complex<double> cs = 0;
          for (int i = 0; i < n; ++i) cs += psi(i, a) * psi(i, b) * psi(i, g) / psi(i, 0);
          CHECK(std::abs(cs - d.c[a][b][g].eval(v)) < 1e-6);
        }
      }
  }
}
