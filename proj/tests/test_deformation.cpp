#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "taucover/brackets.hpp"
#include "taucover/deformation.hpp"
#include "taucover/errors.hpp"
#include "test_main.hpp"

using namespace taucover;

namespace {

DiffPoly P(int n, const char* s) { return DiffPoly::parse(n, s); }
LocalFunctional F(int n, const char* s) { return LocalFunctional(DiffPoly::parse(n, s)); }

struct Principal {
  FrobeniusData d;
  DensityTable h;
  OmegaTable omega;
};

Principal principal(const WDVVPotential& pot, int pmax) {
  Principal b;
  b.d = analyze(pot);
  b.h = build_h(build_theta(b.d, pmax));
  b.omega = build_omega(b.h);
  return b;
}

bool all_pass(const Report& r) {
  for (const auto& rec : r.records) {
    INFO(rec.name << ": " << rec.context);
    CHECK(rec.pass);
  }
  return r.ok();
}

bool names_failure(const Report& r, const std::string& name) {
  const CheckRecord* rec = r.find(name);
  return rec && !rec->pass;
}

}  // namespace

TEST_CASE("delta_Z examples and the bracket oracle") {
  CHECK(delta_Z(F(1, "1/2*v1^2")) == P(1, "v1"));
  CHECK(delta_Z(F(1, "1/2*u1_1^2")) == P(1, "-u1_2"));
  std::mt19937_64 rng(4242);
  for (int trial = 0; trial < 24; ++trial) {
    const int n = 1 + trial % 2;
    LocalFunctional Z(DiffPoly::variable(n, theta(1)));
    LocalFunctional Q(testutil::random_diffpoly(rng, n, trial % 3, trial % 4));
    CHECK(LocalFunctional(delta_Z(Q)) == schouten(Z, Q));
  }
}

TEST_CASE("trivial deformation reduces to the principal hierarchy") {
  Principal k = principal(kdv_potential(), 4);
  DeformedData d = DeformedData::trivial(k.h, 4, 6);
  CHECK(all_pass(verify_deformation(d)));
  DeformedOmega om = build_omega_deformed(d, k.omega);
  for (int p = 0; p <= 4; ++p)
    for (int q = 0; q <= 4; ++q) CHECK(om(0, p, 0, q) == DiffPoly::from_coeff(k.omega(0, p, 0, q)));
  CHECK(all_pass(verify_omega_deformed(d, om)));
  NormalCoordinates nc = normal_coordinates(d);
  CHECK(nc.w[0] == P(1, "v1"));
  CHECK(nc.v_of_w[0] == P(1, "v1"));
  CHECK(all_pass(check_deformed_galilean(d, om, nc)));

  Principal a = principal(a2_potential(), 3);
  DeformedData da = DeformedData::trivial(a.h, 3, 4);
  CHECK(all_pass(verify_deformation(da)));
  DeformedOmega oma = build_omega_deformed(da, a.omega);
  CHECK(all_pass(verify_omega_deformed(da, oma)));
  CHECK(all_pass(check_deformed_galilean(da, oma, normal_coordinates(da))));
}

TEST_CASE("normal coordinates: series inversion") {
  Principal k = principal(kdv_potential(), 1);
  DeformedData d = DeformedData::trivial(k.h, 1, 6);
  // Linear correction: w = (1 + c d^2) v, so v = sum_k (-c d^2)^k w.
  d(0, -1) = P(1, "v1 + 2*u1_2");
  NormalCoordinates nc = normal_coordinates(d);
  CHECK(nc.v_of_w[0] == P(1, "v1 - 2*u1_2 + 4*u1_4 - 8*u1_6"));
  CHECK(all_pass(check_normal_coordinates(nc)));
  // Quadratic correction F2 = v v_xx: v = w - F2(w) up to degree 3.
  d(0, -1) = P(1, "v1 + v1*u1_2");
  nc = normal_coordinates(d);
  CHECK(truncate(nc.v_of_w[0], 3) == P(1, "v1 - v1*u1_2"));
  CHECK(homogeneous_component(nc.v_of_w[0], 4) != DiffPoly(1));
  CHECK(all_pass(check_normal_coordinates(nc)));
}

TEST_CASE("Miura-generated KdV deformation") {
  const int dmax = 6;
  Principal k = principal(kdv_potential(), 5);
  DeformedData d = DeformedData::trivial(k.h, 5, dmax);
  LocalFunctional K = F(1, "1/2*u1_1^2");
  EquivalenceResult res = generate_equivalent(d, K, k.omega);
  const DeformedData& hat = res.hat;
  CHECK(hat.pmax == 4);

  // Hand computation: delta_Z K = -u_xx, so g = -u_x; D_Y v = u_xxx.
  CHECK(res.shift.g == P(1, "-u1_1"));
  CHECK(evolutionary_derivation(res.shift.Y, P(1, "v1")) == P(1, "u1_3"));
  CHECK(res.shift.G == P(1, "-u1_1 - 1/2*u1_4"));
  CHECK(hat.P1 == d.P1);
  CHECK(hat(0, -1) == P(1, "v1"));
  CHECK(hat(0, 0) != d(0, 0));

  CHECK(all_pass(res.report));
  CHECK(all_pass(verify_deformation(hat)));
  CHECK(all_pass(verify_omega_deformed(hat, res.omega_hat)));
  NormalCoordinates nc = normal_coordinates(hat);
  CHECK(all_pass(check_normal_coordinates(nc)));
  CHECK(all_pass(check_deformed_galilean(hat, res.omega_hat, nc)));

  // h^ - e^{D_Y} h~ = d(d^_{a,p+1} G); the index p instead of p+1 does not fit.
  DeformedFlows fl(hat);
  int literal_mismatch = 0;
  for (int p = -1; p < hat.pmax; ++p) {
    DiffPoly diff = hat(0, p) - exp_derivation(res.shift.Y, d(0, p), dmax);
    REQUIRE(is_exact(diff));
    CHECK(integrate(diff) == fl.apply(0, p + 1, res.shift.G, dmax));
    if (p >= 0 && integrate(diff) != fl.apply(0, p, res.shift.G, dmax)) ++literal_mismatch;
  }
  CHECK(literal_mismatch > 0);

  // Deterministic integration: rebuilding gives identical tables.
  DeformedOmega again = build_omega_deformed(hat, k.omega);
  CHECK(again.omega == res.omega_hat.omega);
  for (int p = 0; p <= hat.pmax; ++p) CHECK(homogeneous_component(res.omega_hat(0, p, 0, 0), 0) ==
                                            DiffPoly::from_coeff(k.omega(0, p, 0, 0)));
}

TEST_CASE("K = 0 gives the identity shift") {
  Principal k = principal(kdv_potential(), 3);
  DeformedData d = DeformedData::trivial(k.h, 3, 4);
  EquivalenceResult res = generate_equivalent(d, LocalFunctional(1), k.omega);
  CHECK(res.shift.G.is_zero());
  for (int p = -1; p <= res.hat.pmax; ++p) CHECK(res.hat(0, p) == d(0, p));
  CHECK(all_pass(res.report));
}

TEST_CASE("generate_equivalent errors") {
  Principal k = principal(kdv_potential(), 3);
  DeformedData d = DeformedData::trivial(k.h, 3, 4);
  // Y = [P1, int v^3/6] has degree 1.
  CHECK_THROWS_AS(generate_equivalent(d, F(1, "1/6*v1^3"), k.omega), NonPositiveDegreeShift);
  // delta_Z of int v u_x^2 is u_x^2 - 2 (v u_x)_x, not a total derivative.
  CHECK_THROWS_AS(generate_equivalent(d, F(1, "v1*u1_1^2"), k.omega), NotExact);
}

TEST_CASE("negative controls on deformation data") {
  Principal k = principal(kdv_potential(), 4);
  DeformedData d = DeformedData::trivial(k.h, 4, 6);
  EquivalenceResult res = generate_equivalent(d, F(1, "1/2*u1_1^2"), k.omega);

  DeformedData bad = res.hat;
  bad(0, 1) += P(1, "u1_1^2");
  Report r = verify_deformation(bad);
  CHECK(names_failure(r, "deformed_tau_symmetry"));

  DeformedData bad_p1 = res.hat;
  bad_p1.P1 += F(1, "v1*t1_0*t1_3");
  CHECK(names_failure(verify_deformation(bad_p1), "deformed_hamiltonian"));

  DeformedOmega om = res.omega_hat;
  om(0, 1, 0, 2) += P(1, "u1_2");
  Report ro = verify_omega_deformed(res.hat, om);
  CHECK(names_failure(ro, "deformed_omega_derivative"));
  CHECK(names_failure(ro, "deformed_omega_symmetry"));
  CHECK(names_failure(check_deformed_galilean(res.hat, om, normal_coordinates(res.hat)), "deformed_galilean_omega"));

  // A correction that is not a conserved density breaks exactness.
  DeformedData bad2 = DeformedData::trivial(k.h, 2, 4);
  bad2(0, 0) += P(1, "v1*u1_1^2");
  CHECK_THROWS_AS(build_omega_deformed(bad2, k.omega), NotExact);
}

TEST_CASE("semi-Hamiltonian checks") {
  auto sp1 = std::make_shared<const SeriesSpace>(1, 3);
  Report r1 = check_semi_hamiltonian({VelocitySample{{Series::variable(sp1, 0, 0.7)}}});
  CHECK(all_pass(r1));

  auto sp2 = std::make_shared<const SeriesSpace>(2, 3);
  VelocitySample same{{Series::constant(sp2, 2.0), Series::constant(sp2, 2.0)}};
  CHECK_THROWS_AS(check_semi_hamiltonian({same}), CoincidingVelocities);

  // A system failing Tsarev's condition: A^1 = u^2 u^3, A^2 = u^1, A^3 = -u^1 at a generic point.
  auto sp3 = std::make_shared<const SeriesSpace>(3, 3);
  Series x = Series::variable(sp3, 0, 0.3), y = Series::variable(sp3, 1, 1.1), z = Series::variable(sp3, 2, -0.4);
  Report bad = check_semi_hamiltonian({VelocitySample{{y * z, x, x * -1.0 + 5.0}}});
  CHECK(names_failure(bad, "tsarev"));

  // KdV flows p >= 1 are nondegenerate; p = 0 (d/dx) is not.
  Principal k = principal(kdv_potential(), 4);
  auto [g1, g2] = pencil_from_frobenius(k.d);
  std::vector<VelocitySample> samples;
  for (double v0 : {0.5, 1.3, 2.0}) samples.push_back(principal_velocities(canonical_coordinates_at(g1, g2, {v0}), k.h, 0, 0));
  CHECK(names_failure(check_semi_hamiltonian(samples), "nondegenerate"));
  for (int p = 1; p <= 4; ++p) {
    samples.clear();
    for (double v0 : {0.5, 1.3, 2.0}) {
      PencilChart c = canonical_coordinates_at(g1, g2, {v0});
      samples.push_back(principal_velocities(c, k.h, 0, p));
      // A = v^p / p!
      CHECK(samples.back().A[0].value() == doctest::Approx(std::pow(v0, p) / std::tgamma(p + 1.0)).epsilon(1e-12));
    }
    CHECK(all_pass(check_semi_hamiltonian(samples)));
  }
}

namespace {

// Eigenvalues of V(v) = eta^{-1} Hess h(v), matched to the reference values.
std::vector<double> matched_eigenvalues(const DensityTable& h, int a, int p, const Point& v,
                                        const std::vector<double>& ref) {
  const int n = h.n;
  Matrix V = Matrix::Zero(n, n);
  for (int g = 0; g < n; ++g)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        V(g, c) += to_double(h.eta_inv[g][b]) * h(a, p).derivative(b).derivative(c).eval(v);
  Eigen::EigenSolver<Matrix> es(V);
  std::vector<double> out;
  for (double r : ref) {
    double best = 0, dist = INFINITY;
    for (int i = 0; i < n; ++i)
      if (std::fabs(es.eigenvalues()(i).real() - r) < dist) {
        dist = std::fabs(es.eigenvalues()(i).real() - r);
        best = es.eigenvalues()(i).real();
      }
    out.push_back(best);
  }
  return out;
}

void check_velocities_against_fd(const Principal& pr, const HydroMetric& g1, const HydroMetric& g2, const Point& v,
                                 int a, int p) {
  PencilChart c = canonical_coordinates_at(g1, g2, v);
  VelocitySample s = principal_velocities(c, pr.h, a, p);
  CHECK(s.offdiag < 1e-10);
  const int n = pr.h.n;
  std::vector<double> ref;
  for (const auto& A : s.A) ref.push_back(A.value());
  std::vector<double> direct = matched_eigenvalues(pr.h, a, p, v, ref);
  for (int i = 0; i < n; ++i) CHECK(direct[i] == doctest::Approx(ref[i]).epsilon(1e-10));
  // dA^i/du^k = sum_a dA^i/dv^a dv^a/du^k, with central differences in v.
  const double step = 1e-5;
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      double fd = 0;
      for (int b = 0; b < n; ++b) {
        Point vp = v, vm = v;
        vp[b] += step;
        vm[b] -= step;
        double dA = (matched_eigenvalues(pr.h, a, p, vp, ref)[i] - matched_eigenvalues(pr.h, a, p, vm, ref)[i]) / (2 * step);
        fd += dA * c.dv_du(b, k);
      }
      CHECK(s.A[i].derivative(k).value() == doctest::Approx(fd).epsilon(1e-6));
    }
}

}  // namespace

TEST_CASE("A2 and A3 principal velocities are semi-Hamiltonian") {
  Principal a2 = principal(a2_potential(), 3);
  auto [a1, a2m] = pencil_from_frobenius(a2.d);
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> x(-1.0, 1.0), y(0.2, 2.0);
  for (int p = 0; p <= 3; ++p)
    for (int a = 0; a < 2; ++a) {
      if (a == 0 && p == 0) continue;  // d/dx: all velocities equal 1
      std::vector<VelocitySample> samples;
      for (int s = 0; s < 10; ++s) {
        Point v{x(rng), y(rng)};
        samples.push_back(principal_velocities(canonical_coordinates_at(a1, a2m, v), a2.h, a, p));
        if (s < 2) check_velocities_against_fd(a2, a1, a2m, v, a, p);
      }
      Report r = check_semi_hamiltonian(samples);
      CHECK(r.find("tsarev")->pass);
      CHECK(r.find("diagonal_form")->pass);
    }

  Principal a3 = principal(a3_potential(), 2);
  auto [b1, b2] = pencil_from_frobenius(a3.d);
  std::vector<VelocitySample> samples;
  std::uniform_real_distribution<double> c(-1.5, 1.5);
  while (samples.size() < 10) {
    Point v{c(rng), c(rng), c(rng)};
    try {
      samples.push_back(principal_velocities(canonical_coordinates_at(b1, b2, v), a3.h, 1, 1));
    } catch (const ComplexSpectrum&) {
    }
  }
  Report r = check_semi_hamiltonian(samples);
  CHECK(all_pass(r));
}
