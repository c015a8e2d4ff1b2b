#include <cmath>

#include "doctest.h"
#include "sflab/geodesic.hpp"

using namespace sflab;

namespace {

PolyVectorField heis_x1() {
  PolyVectorField x(3);
  x.component(0) = PolyScalar::constant(3, Rational(1));
  x.component(2) = PolyScalar::variable(3, 1).scaled(rat_parse("-1/2"));
  return x;
}

PolyVectorField heis_x2() {
  PolyVectorField x(3);
  x.component(1) = PolyScalar::constant(3, Rational(1));
  x.component(2) = PolyScalar::variable(3, 0).scaled(rat_parse("1/2"));
  return x;
}

SubFinslerStructure heisenberg(double p = 2.0) {
  return SubFinslerStructure({heis_x1(), heis_x2()}, NormFamily::lp(2, p),
                             Box::cube(3, 3.0), "heisenberg");
}

SubFinslerStructure euclidean(int n, double p = 2.0, double half_width = 10.0) {
  std::vector<PolyVectorField> fields;
  for (int i = 0; i < n; ++i) fields.push_back(PolyVectorField::coordinate(n, i));
  return SubFinslerStructure(std::move(fields), NormFamily::lp(n, p),
                             Box::cube(n, half_width), "euclidean");
}

SubFinslerStructure grushin() {
  PolyVectorField x1 = PolyVectorField::coordinate(2, 0);
  PolyVectorField x2(2);
  x2.component(1) = PolyScalar::variable(2, 0);
  return SubFinslerStructure({x1, x2}, NormFamily::lp(2, 2.0), Box::cube(2, 1.0),
                             "grushin");
}

const double kTwoSqrtPi = 2.0 * std::sqrt(M_PI);

}  // namespace

TEST_SUITE_BEGIN("geodesic");

TEST_CASE("integrate endpoint oracle") {
  auto s = heisenberg();
  ControlPath path;
  path.controls = {{2.0, 0.0}, {0.0, 2.0}};
  auto states = integrate(s, {0.0, 0.0, 0.0}, path, 4);
  REQUIRE(states.size() == 3);
  CHECK(states[1][0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(states[1][1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::fabs(states[1][2]) < 1e-12);
  CHECK(states[2][0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(states[2][1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(states[2][2] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("integrate validates inputs") {
  auto s = heisenberg();
  ControlPath bad_width;
  bad_width.controls = {{1.0, 0.0, 0.0}};
  CHECK_THROWS_AS(integrate(s, {0.0, 0.0, 0.0}, bad_width), InvalidCurve);
  ControlPath empty;
  CHECK_THROWS_AS(integrate(s, {0.0, 0.0, 0.0}, empty), InvalidCurve);
  ControlPath nan_entry;
  nan_entry.controls = {{std::nan(""), 0.0}};
  CHECK_THROWS_AS(integrate(s, {0.0, 0.0, 0.0}, nan_entry), InvalidCurve);

  auto e = euclidean(2, 2.0, 1.0);
  ControlPath escape;
  escape.controls = {{10.0, 0.0}};
  CHECK_THROWS_AS(integrate(e, {0.0, 0.0}, escape), OutOfChart);
}

TEST_CASE("path length matches the gauge along an injective frame") {
  auto s = heisenberg();
  ControlPath path;
  path.controls = {{2.0, 0.0}, {0.0, 2.0}};
  CHECK(path_length(s, {0.0, 0.0, 0.0}, path) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("path length reduces redundant controls") {
  PolyVectorField dx = PolyVectorField::coordinate(1, 0);
  SubFinslerStructure s({dx, dx}, NormFamily::lp(2, 2.0), Box::cube(1, 5.0));
  ControlPath path;
  path.controls = {{2.0, 0.0}};
  // velocity 2 d/dx has the minimal preimage (1, 1)
  CHECK(path_length(s, {0.0}, path) == doctest::Approx(std::sqrt(2.0) * 2.0 / 2.0)
                                           .epsilon(1e-9));
}

TEST_CASE("constant structures solve in closed form") {
  auto opts = SolveOptions::standard();
  auto c2 = distance(euclidean(2), {0.0, 0.0}, {3.0, 4.0}, opts);
  CHECK(c2.exact);
  CHECK(c2.feasible);
  CHECK(c2.value == doctest::Approx(5.0).epsilon(1e-12));
  REQUIRE(c2.controls.controls.size() == 1);
  CHECK(c2.controls.controls[0][0] == doctest::Approx(3.0));
  CHECK(c2.controls.controls[0][1] == doctest::Approx(4.0));

  auto c1 = distance(euclidean(2, 1.0), {0.0, 0.0}, {3.0, 4.0}, opts);
  CHECK(c1.value == doctest::Approx(7.0).epsilon(1e-12));
  auto cinf = distance(euclidean(2, std::numeric_limits<double>::infinity()),
                       {0.0, 0.0}, {3.0, 4.0}, opts);
  CHECK(cinf.value == doctest::Approx(4.0).epsilon(1e-12));

  auto zero = distance(euclidean(2), {1.0, 1.0}, {1.0, 1.0}, opts);
  CHECK(zero.exact);
  CHECK(zero.value == 0.0);
}

TEST_CASE("heisenberg horizontal distance") {
  auto s = heisenberg();
  auto cert = distance(s, {0.0, 0.0, 0.0}, {1.0, 0.0, 0.0});
  CHECK(cert.feasible);
  CHECK(!cert.exact);
  CHECK(cert.endpoint_error <= 1e-6);
  CHECK(std::fabs(cert.value - 1.0) <= 5e-3);
}

TEST_CASE("heisenberg sup norm distance") {
  auto s = heisenberg(std::numeric_limits<double>::infinity());
  auto cert = distance(s, {0.0, 0.0, 0.0}, {1.0, 1.0, 0.0});
  CHECK(cert.feasible);
  CHECK(cert.value >= 0.998);
  CHECK(cert.value <= 1.01);
}

TEST_CASE("heisenberg vertical distance") {
  auto s = heisenberg();
  auto cert = distance(s, {0.0, 0.0, 0.0}, {0.0, 0.0, 1.0});
  CHECK(cert.feasible);
  // circumference of the unit-area circle, approached from above
  CHECK(cert.value >= kTwoSqrtPi - 0.01);
  CHECK(cert.value <= kTwoSqrtPi * 1.02);
}

TEST_CASE("distance scales along dilations") {
  auto s = heisenberg();
  auto opts = SolveOptions::fast();
  auto big = distance(s, {0.0, 0.0, 0.0}, {0.0, 0.0, 1.0}, opts);
  auto small = distance(s, {0.0, 0.0, 0.0}, {0.0, 0.0, 1.0 / 16.0}, opts);
  CHECK(big.feasible);
  CHECK(small.feasible);
  double ratio = big.value / small.value;
  CHECK(ratio == doctest::Approx(4.0).epsilon(0.03));
}

TEST_CASE("repeated solves are deterministic") {
  auto s = heisenberg();
  auto opts = SolveOptions::fast();
  auto one = distance(s, {0.1, -0.2, 0.05}, {0.4, 0.3, -0.1}, opts);
  auto two = distance(s, {0.1, -0.2, 0.05}, {0.4, 0.3, -0.1}, opts);
  CHECK(one.value == two.value);
  CHECK(one.endpoint_error == two.endpoint_error);
  CHECK(one.segments == two.segments);
}

TEST_CASE("hopeless budget reports honestly") {
  auto s = heisenberg();
  SolveOptions opts;
  opts.coarse_segments = 4;
  opts.max_segments = 4;
  opts.multistarts = 1;
  opts.al_rounds = 1;
  opts.inner_iterations = 2;
  opts.endpoint_tol = 1e-9;
  opts.allow_infeasible = true;
  auto cert = distance(s, {0.0, 0.0, 0.0}, {0.0, 0.0, 1.0}, opts);
  CHECK(!cert.feasible);
  CHECK(cert.endpoint_error > 1e-3);
  opts.allow_infeasible = false;
  CHECK_THROWS_AS(distance(s, {0.0, 0.0, 0.0}, {0.0, 0.0, 1.0}, opts), NoConvergence);
}

TEST_CASE("grushin certificate is consistent with its own path") {
  auto s = grushin();
  std::vector<double> a{0.5, 0.0}, b{0.5, 0.2};
  auto cert = distance(s, a, b);
  CHECK(cert.feasible);
  CHECK(cert.value >= 0.30);
  CHECK(cert.value <= 0.41);
  double len = path_length(s, a, cert.controls);
  CHECK(len == doctest::Approx(cert.value).epsilon(2e-2));
}

TEST_SUITE_END();
