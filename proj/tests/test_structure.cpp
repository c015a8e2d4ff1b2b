#include <cmath>

#include "doctest.h"
#include "sflab/structure.hpp"

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

SubFinslerStructure grushin() {
  PolyVectorField x1 = PolyVectorField::coordinate(2, 0);
  PolyVectorField x2(2);
  x2.component(1) = PolyScalar::variable(2, 0);
  return SubFinslerStructure({x1, x2}, NormFamily::lp(2, 2.0), Box::cube(2, 1.0),
                             "grushin");
}

SubFinslerStructure grushin_squared() {
  PolyVectorField x1 = PolyVectorField::coordinate(2, 0);
  PolyVectorField x2(2);
  x2.component(1) = PolyScalar::variable(2, 0) * PolyScalar::variable(2, 0);
  return SubFinslerStructure({x1, x2}, NormFamily::lp(2, 2.0), Box::cube(2, 1.0));
}

SubFinslerStructure euclidean(int n) {
  std::vector<PolyVectorField> fields;
  for (int i = 0; i < n; ++i) fields.push_back(PolyVectorField::coordinate(n, i));
  return SubFinslerStructure(fields, NormFamily::lp(n, 2.0), Box::cube(n, 4.0),
                             "euclidean");
}

}  // namespace

TEST_SUITE_BEGIN("structure");

TEST_CASE("compiled frame matches symbolic evaluation") {
  auto s = heisenberg();
  std::vector<double> q{0.3, -0.7, 0.2};
  Eigen::MatrixXd a;
  s.frame_matrix(q, a);
  CHECK(a.rows() == 3);
  CHECK(a.cols() == 2);
  CHECK(a(0, 0) == doctest::Approx(1.0));
  CHECK(a(2, 0) == doctest::Approx(0.35));
  CHECK(a(2, 1) == doctest::Approx(0.15));
  CHECK(a(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("euclidean flag is trivial") {
  auto s = euclidean(2);
  auto rep = flag_at(s, {0.0, 0.0});
  CHECK(rep.growth == std::vector<int>{2});
  CHECK(rep.weights.w == std::vector<int>{1, 1});
  CHECK(rep.step == 1);
  CHECK(rep.homogeneous_dimension == 2);
  CHECK(rep.regular);
}

TEST_CASE("heisenberg flag oracle") {
  auto s = heisenberg();
  auto rep = flag_at(s, {0.0, 0.0, 0.0});
  CHECK(rep.growth == std::vector<int>{2, 3});
  CHECK(rep.weights.w == std::vector<int>{1, 1, 2});
  CHECK(rep.step == 2);
  CHECK(rep.homogeneous_dimension == 4);
  CHECK(rep.regular);
  REQUIRE(rep.adapted_frame.size() == 3);
  // Third adapted field is the central bracket direction.
  CHECK(rep.adapted_words[2].size() == 2);
  CHECK(rank_at(s, {0.0, 0.0, 0.0}) == 2);
}

TEST_CASE("grushin flag distinguishes the singular line") {
  auto s = grushin();
  auto at0 = flag_at(s, {0.0, 0.0});
  CHECK(at0.growth == std::vector<int>{1, 2});
  CHECK(at0.weights.w == std::vector<int>{1, 2});
  CHECK(at0.homogeneous_dimension == 3);
  CHECK_FALSE(at0.regular);
  auto off = flag_at(s, {0.5, 0.0});
  CHECK(off.growth == std::vector<int>{2});
  CHECK(off.weights.w == std::vector<int>{1, 1});
  CHECK(off.regular);
  CHECK(rank_at(s, {0.0, 0.0}) == 1);
  CHECK(rank_at(s, {0.5, 0.0}) == 2);
  CHECK_FALSE(regularity_scan(s, {0.0, 0.0}, 0.1, 16));
  CHECK(regularity_scan(s, {0.5, 0.1}, 0.05, 16));
}

TEST_CASE("plateaued growth vector") {
  auto s = grushin_squared();
  auto rep = flag_at(s, {0.0, 0.0});
  CHECK(rep.growth == std::vector<int>{1, 1, 2});
  CHECK(rep.weights.w == std::vector<int>{1, 3});
  CHECK(rep.step == 3);
  CHECK(rep.homogeneous_dimension == 4);
}

TEST_CASE("hoermander failures throw") {
  // Single coordinate field in the plane: series terminates below full rank.
  auto flat = SubFinslerStructure({PolyVectorField::coordinate(2, 0)},
                                  NormFamily::lp(1, 2.0), Box::cube(2, 1.0));
  CHECK_THROWS_AS(flag_at(flat, {0.0, 0.0}), HoermanderUndecided);
  CHECK(flat.series_terminated(4));
  // Depth cap short of the needed level.
  auto s = grushin_squared();
  CHECK_THROWS_AS(flag_at(s, {0.0, 0.0}, 2), HoermanderUndecided);
}

TEST_CASE("induced norm with injective frame") {
  auto s = heisenberg();
  std::vector<double> q{0.0, 0.0, 0.0};
  std::vector<double> control;
  double val = induced_norm(s, q, {3.0, 4.0, 0.0}, &control);
  CHECK(val == doctest::Approx(5.0).epsilon(1e-9));
  REQUIRE(control.size() == 2);
  CHECK(control[0] == doctest::Approx(3.0));
  CHECK(control[1] == doctest::Approx(4.0));
  // Off-center the admissible plane tilts.
  std::vector<double> q2{0.0, 2.0, 0.0};
  double val2 = induced_norm(s, q2, {1.0, 0.0, -1.0}, &control);
  CHECK(val2 == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS_AS(induced_norm(s, q, {0.0, 0.0, 1.0}), NotHorizontal);
}

TEST_CASE("induced norm minimizes over redundant frames") {
  // Two copies of d/dx: preimages of v = 1 form the line u1 + u2 = 1.
  PolyVectorField dx = PolyVectorField::coordinate(1, 0);
  Box line({-1.0}, {1.0});
  std::vector<double> q{0.0};
  {
    SubFinslerStructure s({dx, dx}, NormFamily::lp(2, 2.0), line);
    std::vector<double> u;
    CHECK(induced_norm(s, q, {1.0}, &u) ==
          doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-8));
    CHECK(u[0] == doctest::Approx(0.5).epsilon(1e-6));
  }
  {
    SubFinslerStructure s({dx, dx}, NormFamily::lp(2, std::numeric_limits<double>::infinity()), line);
    CHECK(induced_norm(s, q, {1.0}) == doctest::Approx(0.5).epsilon(1e-5));
  }
  {
    SubFinslerStructure s({dx, dx}, NormFamily::lp(2, 1.0), line);
    CHECK(induced_norm(s, q, {1.0}) == doctest::Approx(1.0).epsilon(1e-5));
  }
  {
    // Weighted quadratic: minimize u1^2 + 4 u2^2 on the line, optimum 2/sqrt(5).
    PolyScalar one = PolyScalar::constant(1, Rational(1));
    std::vector<std::vector<PolyScalar>> g{{one, PolyScalar::zero(1)},
                                           {PolyScalar::zero(1), one.scaled(Rational(4))}};
    SubFinslerStructure s({dx, dx}, NormFamily::quadratic(g), line);
    std::vector<double> u;
    CHECK(induced_norm(s, q, {1.0}, &u) ==
          doctest::Approx(2.0 / std::sqrt(5.0)).epsilon(1e-9));
    CHECK(u[0] == doctest::Approx(0.8).epsilon(1e-8));
    CHECK(u[1] == doctest::Approx(0.2).epsilon(1e-8));
  }
}

TEST_CASE("induced norm respects the gauge at the base point") {
  auto s = grushin();
  std::vector<double> q{0.5, 0.0};
  // v = (0, 1) = (1/0.5) X2 => control (0, 2), l2 gauge 2.
  CHECK(induced_norm(s, q, {0.0, 1.0}) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK_THROWS_AS(induced_norm(s, {0.0, 0.0}, {0.0, 1.0}), NotHorizontal);
}

TEST_SUITE_END();
