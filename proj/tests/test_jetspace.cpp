#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "taucover/errors.hpp"
#include "taucover/jet.hpp"
#include "test_main.hpp"

using namespace taucover;

namespace {

DiffPoly P(int n, const char* s) { return DiffPoly::parse(n, s); }

}  // namespace

TEST_CASE("rational parsing and formatting") {
  CHECK(to_string(parse_rational("6/4")) == "3/2");
  CHECK(to_string(parse_rational("-2")) == "-2");
  CHECK(to_string(parse_rational(" 10/5 ")) == "2");
  CHECK_THROWS_AS(parse_rational("1/0"), ParseError);
  CHECK_THROWS_AS(parse_rational("x"), ParseError);
}

TEST_CASE("super-commutative product") {
  const int n = 2;
  DiffPoly t1 = DiffPoly::variable(n, theta(1)), t2 = DiffPoly::variable(n, theta(2));
  CHECK((t1 * t2) == P(n, "t1_0*t2_0"));
  CHECK((t2 * t1) == P(n, "-1*t1_0*t2_0"));
  CHECK((t1 * t1).is_zero());
  CHECK((DiffPoly::variable(n, v(1)) * DiffPoly::variable(n, u(1, 1))) == P(n, "v1*u1_1"));
  CHECK_THROWS_AS(DiffPoly(1) * DiffPoly(2), DimensionMismatch);
}

TEST_CASE("text form round trip") {
  DiffPoly a = P(2, "3/2*v1^2*u2_1*t1_0*t2_3 - 1/3*u1_2 + 4");
  CHECK(DiffPoly::parse(2, a.str()) == a);
  // Written in a non-canonical order, the sign is absorbed.
  CHECK(P(2, "t2_0*t1_0") == P(2, "-t1_0*t2_0"));
  CHECK(P(1, "t1_1*t1_1").is_zero());
  CHECK_THROWS_AS(P(1, "q1"), ParseError);
  CHECK_THROWS_AS(P(1, "v2"), DimensionMismatch);
}

TEST_CASE("total derivative examples") {
  CHECK(total_derivative(P(1, "v1")) == P(1, "u1_1"));
  CHECK(total_derivative(P(1, "v1*u1_1")) == P(1, "u1_1^2 + v1*u1_2"));
  CHECK(total_derivative(P(1, "1")).is_zero());
  CHECK(total_derivative(P(1, "t1_0*t1_1")) == P(1, "t1_0*t1_2"));
}

TEST_CASE("degrees") {
  DegreeInfo s = degree(P(2, "u1_1*t1_0*t2_1"), DegreeKind::Standard);
  DegreeInfo p = degree(P(2, "u1_1*t1_0*t2_1"), DegreeKind::Super);
  CHECK(s.homogeneous());
  CHECK(s.value == 2);
  CHECK(p.value == 2);
  CHECK(degree(P(1, "v1 + u1_1"), DegreeKind::Standard).status == DegreeInfo::Status::Inhomogeneous);
  CHECK(degree(DiffPoly(1), DegreeKind::Standard).status == DegreeInfo::Status::Zero);
}

TEST_CASE("variational derivative examples") {
  CHECK(variational_derivative(P(1, "1/2*u1_1^2"), 1, Parity::Even) == P(1, "-u1_2"));
  CHECK(variational_derivative(P(2, "t1_0*t2_1"), 1, Parity::Odd) == P(2, "t2_1"));
  CHECK(variational_derivative(total_derivative(P(2, "v1*u2_1^2*t1_0")), 1, Parity::Even).is_zero());
}

TEST_CASE("exactness and integration examples") {
  CHECK(is_exact(P(1, "v1*u1_1")));
  CHECK_FALSE(is_exact(P(1, "u1_1^2")));
  CHECK(is_exact(DiffPoly(1)));
  CHECK(integrate(P(1, "u1_1")) == P(1, "v1"));
  CHECK(integrate(P(1, "u1_1^2 + v1*u1_2")) == P(1, "v1*u1_1"));
  CHECK(integrate(P(1, "v1*u1_1")) == P(1, "1/2*v1^2"));
  CHECK_THROWS_AS(integrate(P(1, "u1_1^2")), NotExact);
  CHECK_THROWS_AS(integrate(P(1, "1")), NotExact);
}

TEST_CASE("normal form examples") {
  CHECK(normal_form(P(1, "v1*u1_1")).is_zero());
  CHECK(normal_form(P(1, "u1_1^2")) == P(1, "u1_1^2"));
  CHECK(normal_form(P(1, "v1*u1_2")) == P(1, "-u1_1^2"));
  CHECK(normal_form(P(1, "t1_0*t1_1")) == P(1, "t1_0*t1_1"));
  CHECK(normal_form(P(1, "t1_0*t1_2")).is_zero());
  CHECK(normal_form(P(1, "t1_1*t1_2")) == P(1, "t1_1*t1_2"));
}

TEST_CASE("property: derivation, super-commutativity, Euler operator (seeded)") {
  std::mt19937_64 rng(20240601);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + trial % 2;
    int pa = trial % 3, pb = (trial / 3) % 3;
    DiffPoly a = testutil::random_diffpoly(rng, n, pa, trial % 4);
    DiffPoly b = testutil::random_diffpoly(rng, n, pb, (trial + 1) % 3);
    CHECK(total_derivative(a * b) == total_derivative(a) * b + a * total_derivative(b));
    Rational sign = (pa * pb) % 2 == 0 ? 1 : -1;
    CHECK(a * b == sign * (b * a));
    DiffPoly da = total_derivative(a);
    for (int i = 1; i <= n; ++i) {
      CHECK(variational_derivative(da, i, Parity::Even).is_zero());
      CHECK(variational_derivative(da, i, Parity::Odd).is_zero());
    }
    // Degree bookkeeping: d maps degree d to d + 1, super degree unchanged.
    if (!da.is_zero()) {
      DegreeInfo d0 = degree(a, DegreeKind::Standard), d1 = degree(da, DegreeKind::Standard);
      if (d0.homogeneous()) CHECK(d1.value == d0.value + 1);
      CHECK(degree(da, DegreeKind::Super).value == degree(a, DegreeKind::Super).value);
    }
  }
}

TEST_CASE("property: integrate is a right inverse, normal form invariants (seeded)") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + trial % 2;
    DiffPoly g = testutil::random_diffpoly(rng, n, trial % 3, trial % 4);
    DiffPoly a = total_derivative(g);
    CHECK(is_exact(a));
    DiffPoly h = integrate(a);
    CHECK(total_derivative(h) == a);
    DiffPoly f = testutil::random_diffpoly(rng, n, trial % 3, 1 + trial % 3);
    DiffPoly nf = normal_form(f);
    CHECK(normal_form(nf) == nf);
    CHECK(normal_form(f + total_derivative(g)) == nf);
    // The Euler operator sees only the class.
    for (int i = 1; i <= n; ++i)
      CHECK(variational_derivative(f, i, Parity::Even) == variational_derivative(nf, i, Parity::Even));
    // normal form zero iff exact
    CHECK(nf.is_zero() == is_exact(f));
  }
}

TEST_CASE("substitution") {
  // v -> v + u_2 composed with derivatives
  std::vector<DiffPoly> subs{P(1, "v1 + u1_2")};
  CHECK(substitute(P(1, "v1*u1_1"), subs, 10) == P(1, "v1*u1_1 + v1*u1_3 + u1_2*u1_1 + u1_2*u1_3"));
  CHECK(substitute(P(1, "v1*u1_1"), subs, 3) == P(1, "v1*u1_1 + v1*u1_3 + u1_2*u1_1"));
}
