#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "taucover/errors.hpp"
#include "taucover/frobenius.hpp"
#include "taucover/pencil.hpp"
#include "taucover/taylor.hpp"

using namespace taucover;

namespace {

LocalFunctional F(int n, const char* s) { return LocalFunctional(DiffPoly::parse(n, s)); }

HydroMetric scalar(const char* g, const Rational& gamma) {
  HydroMetric m(1);
  m.g[0][0] = to_coeff(DiffPoly::parse(1, g));
  m.gamma[0][0][0] = CoeffPoly::constant(1, gamma);
  return m;
}

// Closed-form A2 canonical data, written independently of the library:
// det(g2 - u g1) = 4/27 v2^3 - (v1 - u)^2, so u = v1 -+ s(v2), s = sqrt(4/27) v2^{3/2},
// and f^i = 2 du^i/dv^1 du^i/dv^2 = -+ 3 sqrt(4/27) v2^{1/2}. In canonical coordinates
// v2 = (27/4)^{1/3} ((u2 - u1)/2)^{2/3}.
const double kS = std::sqrt(4.0 / 27.0);

double a2_f(int i, double u1, double u2) {
  double v2 = std::cbrt(27.0 / 4.0) * std::pow((u2 - u1) / 2, 2.0 / 3.0);
  return (i == 0 ? -3.0 : 3.0) * kS * std::sqrt(v2);
}

// Richardson-extrapolated central difference.
template <class Fn>
double fd(Fn fn, double x, double h = 1e-4) {
  auto d = [&](double s) { return (fn(x + s) - fn(x - s)) / (2 * s); };
  return (4 * d(h / 2) - d(h)) / 3;
}

std::vector<Point> a2_samples() {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> v1(-1.0, 1.0), v2(0.5, 2.0);
  std::vector<Point> pts;
  for (int k = 0; k < 10; ++k) pts.push_back({v1(rng), v2(rng)});
  return pts;
}

}  // namespace

TEST_CASE("taylor series arithmetic") {
  auto sp = std::make_shared<const SeriesSpace>(2, 4);
  Series x = Series::variable(sp, 0, 2.0), y = Series::variable(sp, 1, 1.0);
  Series p = x * x * y;  // (2 + a)^2 (1 + b)
  CHECK(p.value() == doctest::Approx(4.0));
  CHECK(p.coeff({1, 1}) == doctest::Approx(4.0));
  CHECK(p.coeff({2, 1}) == doctest::Approx(1.0));
  Series q = (x * y).inverse() * (x * y);
  CHECK(q.value() == doctest::Approx(1.0));
  CHECK(std::fabs(q.coeff({2, 1})) < 1e-14);
  Series r = x.sqrt() * x.sqrt();
  CHECK(r.coeff({1, 0}) == doctest::Approx(1.0));
  CHECK(std::fabs(r.coeff({3, 0})) < 1e-14);
  CHECK(p.derivative(0).coeff({0, 1}) == doctest::Approx(4.0));
  // compose: (x*y)(a, b) evaluated along a = s, b = s
  auto sp1 = std::make_shared<const SeriesSpace>(1, 4);
  Series s = Series::variable(sp1, 0, 0.0);
  Series c = (x * y).compose({s, s});  // (2 + s)(1 + s) = 2 + 3s + s^2
  CHECK(c.coeff({1}) == doctest::Approx(3.0));
  CHECK(c.coeff({2}) == doctest::Approx(1.0));
}

TEST_CASE("poisson_operator examples") {
  CHECK(poisson_operator(scalar("1", 0)) == F(1, "1/2*t1_0*t1_1"));
  CHECK(poisson_operator(scalar("v1", make_rational(1, 2))) == F(1, "1/2*v1*t1_0*t1_1"));
  HydroMetric bad(2);
  bad.g[0][1] = CoeffPoly::variable(2, 0);
  CHECK_THROWS_AS(poisson_operator(bad), NonSymmetricMetric);
}

TEST_CASE("canonical coordinates: scalar and degenerate cases") {
  PencilChart c = canonical_coordinates_at(scalar("1", 0), scalar("v1", make_rational(1, 2)), {3.0});
  CHECK(c.u[0] == doctest::Approx(3.0));
  CHECK(c.f[0] == doctest::Approx(1.0));
  CHECK(std::abs(rotation_coefficients(c)(0, 0)) == 0.0);
  CHECK(check_egoroff(c) == 0.0);
  CHECK(check_gamma_system(c).max() == 0.0);
  CHECK(check_DZ_f(c) == 0.0);
  CHECK(check_irreducible(c));

  HydroMetric id = HydroMetric::constant({{1, 0}, {0, 1}});
  CHECK_THROWS_AS(canonical_coordinates_at(id, id, {0.3, 0.4}), DegenerateSpectrum);
  HydroMetric g1 = HydroMetric::constant({{1, 0}, {0, -1}});
  HydroMetric g2 = HydroMetric::constant({{0, 1}, {1, 0}});
  CHECK_THROWS_AS(canonical_coordinates_at(g1, g2, {0.3, 0.4}), ComplexSpectrum);
}

TEST_CASE("two decoupled KdV pencils are reducible") {
  HydroMetric g1 = HydroMetric::constant({{1, 0}, {0, 1}});
  HydroMetric g2(2);
  g2.g[0][0] = CoeffPoly::variable(2, 0);
  g2.g[1][1] = CoeffPoly::variable(2, 1);
  g2.gamma[0][0][0] = CoeffPoly::constant(2, make_rational(1, 2));
  g2.gamma[1][1][1] = CoeffPoly::constant(2, make_rational(1, 2));
  PencilChart c = canonical_coordinates_at(g1, g2, {0.5, 2.0});
  CHECK(c.u[0] == doctest::Approx(0.5));
  CHECK(c.u[1] == doctest::Approx(2.0));
  CHECK_FALSE(check_irreducible(c));
  CHECK(c.residuals.at("christoffel_g2") < 1e-12);
}

TEST_CASE("A2 chart against closed-form finite-difference oracle") {
  auto [g1, g2] = pencil_from_frobenius(analyze(a2_potential()));
  for (const Point& v : a2_samples()) {
    PencilChart c = canonical_coordinates_at(g1, g2, v);
    double s = kS * std::pow(v[1], 1.5);
    CHECK(c.u[0] == doctest::Approx(v[0] - s).epsilon(1e-12));
    CHECK(c.u[1] == doctest::Approx(v[0] + s).epsilon(1e-12));
    double ds = 1.5 * kS * std::sqrt(v[1]);
    CHECK(c.du_dv(0, 1) == doctest::Approx(-ds).epsilon(1e-10));
    CHECK(c.du_dv(1, 1) == doctest::Approx(ds).epsilon(1e-10));
    for (int i = 0; i < 2; ++i) {
      CHECK(c.f[i] == doctest::Approx(a2_f(i, c.u[0], c.u[1])).epsilon(1e-10));
      double d1 = fd([&](double x) { return a2_f(i, x, c.u[1]); }, c.u[0]);
      double d2 = fd([&](double x) { return a2_f(i, c.u[0], x); }, c.u[1]);
      CHECK(std::fabs(c.df(i, 0) - d1) < 1e-6);
      CHECK(std::fabs(c.df(i, 1) - d2) < 1e-6);
    }
    // gamma_12 = d_2 f_1 / (2 sqrt(f_1) sqrt(f_2)) with f_1 < 0 < f_2.
    auto fcov = [&](int i, double x1, double x2) { return 1.0 / a2_f(i, x1, x2); };
    double d = fd([&](double x) { return fcov(0, c.u[0], x); }, c.u[1]);
    std::complex<double> root = std::sqrt(std::complex<double>(fcov(0, c.u[0], c.u[1]))) *
                                std::sqrt(std::complex<double>(fcov(1, c.u[0], c.u[1])));
    CHECK(std::abs(c.gamma(0, 1) - d / (2.0 * root)) < 1e-6);
    CHECK(std::abs(c.gamma(0, 1) - c.gamma(1, 0)) < 1e-8);
    CHECK(c.sign[0] == -1);
    CHECK(c.sign[1] == 1);
    for (const auto& [name, r] : c.residuals) {
      INFO(name);
      CHECK(r < 1e-8);
    }
    CHECK(check_irreducible(c));
  }
}

TEST_CASE("A3 chart: gamma system on distinct triples") {
  FrobeniusData d = analyze(a3_potential());
  auto [g1, g2] = pencil_from_frobenius(d);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> box(-1.5, 1.5);
  int good = 0;
  double worst_distinct_gamma = 0;
  for (int trial = 0; trial < 400 && good < 10; ++trial) {
    Point v{box(rng), box(rng), box(rng)};
    PencilChart c;
    try {
      c = canonical_coordinates_at(g1, g2, v);
    } catch (const ComplexSpectrum&) {
      continue;
    }
    ++good;
    for (const auto& [name, r] : c.residuals) {
      INFO(name << " at " << v[0] << "," << v[1] << "," << v[2]);
      CHECK(r < 1e-8 * (1 + c.gamma.cwiseAbs().maxCoeff() * c.gamma.cwiseAbs().maxCoeff()));
    }
    worst_distinct_gamma = std::max(worst_distinct_gamma, c.dgamma[2].cwiseAbs()(0, 1));
  }
  CHECK(good == 10);
  // the distinct-index equation is exercised with nonzero data
  CHECK(worst_distinct_gamma > 1e-3);
}

TEST_CASE("psi residual") {
  FrobeniusData kdv = analyze(kdv_potential());
  auto [k1, k2] = pencil_from_frobenius(kdv);
  PencilChart kc = canonical_coordinates_at(k1, k2, {2.0});
  auto kpsi = [&](const Point& v) { return psi_at(kdv, canonical_coordinates_at(k1, k2, v)); };
  PsiResidual kr = psi_residual(kc, kpsi);
  CHECK(kr.value < 1e-12);
  CHECK_FALSE(kr.trivial);

  FrobeniusData a2 = analyze(a2_potential());
  auto [g1, g2] = pencil_from_frobenius(a2);
  auto psi = [&](const Point& v) { return psi_at(a2, canonical_coordinates_at(g1, g2, v)); };
  for (const Point& v : a2_samples()) {
    PencilChart c = canonical_coordinates_at(g1, g2, v);
    PsiResidual r = psi_residual(c, psi);
    CHECK(r.value < 1e-6);
    CHECK_FALSE(r.trivial);
  }
  PencilChart c = canonical_coordinates_at(g1, g2, {0.1, 1.0});
  PsiResidual zero = psi_residual(c, [](const Point&) { return CMatrix(CMatrix::Zero(2, 2)); });
  CHECK(zero.value == 0.0);
  CHECK(zero.trivial);
}

TEST_CASE("sorted-root determinism under coordinate permutation") {
  // Swap v1 <-> v2 in the A2 pencil: the chart must be the same up to
  // permuting Jacobian columns.
  auto [g1, g2] = pencil_from_frobenius(analyze(a2_potential()));
  auto swap_metric = [](const HydroMetric& m) {
    HydroMetric r(2);
    std::vector<CoeffPoly> sw{CoeffPoly::variable(2, 1), CoeffPoly::variable(2, 0)};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        r.g[1 - a][1 - b] = compose(m.g[a][b], sw);
        for (int c = 0; c < 2; ++c) r.gamma[1 - a][1 - b][1 - c] = compose(m.gamma[a][b][c], sw);
      }
    return r;
  };
  HydroMetric h1 = swap_metric(g1), h2 = swap_metric(g2);
  for (const Point& v : a2_samples()) {
    PencilChart c = canonical_coordinates_at(g1, g2, v);
    PencilChart p = canonical_coordinates_at(h1, h2, {v[1], v[0]});
    for (int i = 0; i < 2; ++i) {
      CHECK(p.u[i] == doctest::Approx(c.u[i]).epsilon(1e-12));
      CHECK(p.f[i] == doctest::Approx(c.f[i]).epsilon(1e-10));
      CHECK(p.du_dv(i, 0) == doctest::Approx(c.du_dv(i, 1)).epsilon(1e-10));
    }
    CHECK(p.residuals.at("christoffel_g2") < 1e-8);
  }
}
