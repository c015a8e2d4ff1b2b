#include <cmath>
#include <random>

#include "doctest.h"
#include "sflab/cdlab.hpp"
#include "sflab/coords.hpp"

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

SubFinslerStructure heisenberg() {
  return SubFinslerStructure({heis_x1(), heis_x2()}, NormFamily::lp(2, 2.0),
                             Box::cube(3, 3.0), "heisenberg");
}

SubFinslerStructure euclidean(int n, double half_width = 10.0) {
  std::vector<PolyVectorField> fields;
  for (int i = 0; i < n; ++i) fields.push_back(PolyVectorField::coordinate(n, i));
  return SubFinslerStructure(std::move(fields), NormFamily::lp(n, 2.0),
                             Box::cube(n, half_width), "euclidean");
}

DiscreteMeasure point_mass(std::vector<double> p, double vol = 1.0) {
  DiscreteMeasure mu;
  mu.support = {std::move(p)};
  mu.masses = {1.0};
  mu.cell_volumes = {vol};
  return mu;
}

DiscreteMeasure gaussian_line(double center, double sigma, int k) {
  DiscreteMeasure mu;
  double h = 6.0 * sigma / k;
  double total = 0;
  for (int i = 0; i < k; ++i) {
    double x = center - 3.0 * sigma + (i + 0.5) * h;
    double w = std::exp(-0.5 * (x - center) * (x - center) / (sigma * sigma));
    mu.support.push_back({x});
    mu.masses.push_back(w);
    mu.cell_volumes.push_back(h);
    mu.cell_extents.push_back({h});
    total += w;
  }
  for (double& w : mu.masses) w /= total;
  return mu;
}

Box rect(double cx, double cy, double sx, double sy) {
  Box b;
  b.lo = {cx - 0.5 * sx, cy - 0.5 * sy};
  b.hi = {cx + 0.5 * sx, cy + 0.5 * sy};
  return b;
}

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

}  // namespace

TEST_SUITE_BEGIN("cdlab");

TEST_CASE("discrete measure validation") {
  auto mu = DiscreteMeasure::uniform_box(rect(0, 0, 1, 1), 3);
  CHECK_NOTHROW(mu.validate());
  CHECK(mu.size() == 9);

  auto bad = mu;
  bad.masses[0] += 0.5;
  CHECK_THROWS_AS(bad.validate(), InvalidMeasure);

  bad = mu;
  bad.masses[0] = -bad.masses[0];
  CHECK_THROWS_AS(bad.validate(), InvalidMeasure);

  bad = mu;
  bad.cell_volumes[3] = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidMeasure);

  bad = mu;
  bad.cell_extents[2][1] = -1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidMeasure);

  bad = mu;
  bad.masses.pop_back();
  CHECK_THROWS_AS(bad.validate(), InvalidMeasure);

  CHECK_THROWS_AS(DiscreteMeasure{}.validate(), InvalidMeasure);
}

TEST_CASE("renyi entropy closed forms and invariances") {
  // Four equal cells tiling unit volume: density one everywhere.
  auto unit = DiscreteMeasure::uniform_box(rect(0, 0, 1, 1), 2);
  CHECK(renyi_entropy(unit, 2.0) == doctest::Approx(-1.0).epsilon(1e-12));

  auto four = DiscreteMeasure::uniform_box(rect(0, 0, 2, 2), 2);
  CHECK(renyi_entropy(four, 2.0) == doctest::Approx(-2.0).epsilon(1e-12));

  // Entropy of a near-singular measure drains to zero with the cell volume.
  DiscreteMeasure spike;
  spike.support = {{0.0}, {1.0}};
  spike.masses = {0.5, 0.5};
  spike.cell_volumes = {1e-12, 1e-12};
  CHECK(std::abs(renyi_entropy(spike, 2.0)) < 1e-5);

  auto shuffled = four;
  std::swap(shuffled.support[0], shuffled.support[3]);
  std::swap(shuffled.masses[0], shuffled.masses[3]);
  std::swap(shuffled.cell_volumes[0], shuffled.cell_volumes[3]);
  std::swap(shuffled.cell_extents[0], shuffled.cell_extents[3]);
  CHECK(std::abs(renyi_entropy(shuffled, 2.0) - renyi_entropy(four, 2.0)) < 1e-12);

  // Halving every cell leaves the piecewise density unchanged.
  DiscreteMeasure split;
  for (int i = 0; i < four.size(); ++i)
    for (int piece = 0; piece < 2; ++piece) {
      auto p = four.support[i];
      p[0] += (piece == 0 ? -0.25 : 0.25);
      split.support.push_back(p);
      split.masses.push_back(0.5 * four.masses[i]);
      split.cell_volumes.push_back(0.5 * four.cell_volumes[i]);
    }
  for (double n : {1.5, 2.0, 7.0})
    CHECK(std::abs(renyi_entropy(split, n) - renyi_entropy(four, n)) < 1e-12);

  CHECK_THROWS_AS(renyi_entropy(four, 1.0), Error);
  CHECK_THROWS_AS(renyi_entropy(four, 0.5), Error);
}

TEST_CASE("transport plan matches the assignment oracle") {
  std::mt19937_64 rng(0xcd1ab);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<double>> xs, ys;
  for (int i = 0; i < 5; ++i) {
    xs.push_back({unit(rng), unit(rng)});
    ys.push_back({unit(rng) + 0.7, unit(rng) - 0.2});
  }
  Eigen::MatrixXd cost(5, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) cost(i, j) = sq_dist(xs[i], ys[j]);

  std::vector<double> w(5, 0.2);
  auto plan = optimal_transport(cost, w, w);

  std::vector<int> perm = {0, 1, 2, 3, 4};
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0;
    for (int i = 0; i < 5; ++i) c += 0.2 * cost(i, perm[i]);
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  CHECK(plan.cost == doctest::Approx(best).epsilon(1e-12));

  std::vector<double> row(5, 0.0), col(5, 0.0);
  for (int e = 0; e < plan.entries(); ++e) {
    row[plan.from[e]] += plan.mass[e];
    col[plan.to[e]] += plan.mass[e];
  }
  for (int i = 0; i < 5; ++i) {
    CHECK(row[i] == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(col[i] == doctest::Approx(0.2).epsilon(1e-12));
  }

  CHECK_THROWS_AS(optimal_transport(cost, {0.5, 0.5}, w), Error);
  CHECK_THROWS_AS(optimal_transport(cost, {0.6, 0.2, 0.2, 0.2, -0.2}, w), Error);
  CHECK_THROWS_AS(optimal_transport(Eigen::MatrixXd::Constant(5, 5, -1.0), w, w), Error);
  CHECK_THROWS_AS(optimal_transport(Eigen::MatrixXd::Zero(201, 201),
                                    std::vector<double>(201, 1.0 / 201),
                                    std::vector<double>(201, 1.0 / 201)),
                  Error);
}

TEST_CASE("euclidean interpolation endpoints and midpoints") {
  auto e2 = euclidean(2);
  auto mu0 = point_mass({0.0, 0.0});
  auto mu1 = point_mass({2.0, 0.0});

  auto at0 = w2_interpolate(e2, mu0, mu1, 0.0);
  CHECK(at0.support == mu0.support);
  CHECK(at0.masses == mu0.masses);
  auto at1 = w2_interpolate(e2, mu0, mu1, 1.0);
  CHECK(at1.support == mu1.support);

  auto mid = w2_interpolate(e2, mu0, mu1, 0.5);
  REQUIRE(mid.size() == 1);
  CHECK(mid.masses[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mid.support[0][0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(mid.support[0][1]) < 1e-9);

  auto third = w2_interpolate(e2, mu0, mu1, 0.25);
  CHECK(third.support[0][0] == doctest::Approx(0.5).epsilon(1e-9));

  // A measure transported to itself never moves, at any parameter.
  auto grid = DiscreteMeasure::uniform_box(rect(0.3, -0.2, 1.0, 1.4), 3);
  auto still = w2_interpolate(e2, grid, grid, 0.3);
  REQUIRE(still.size() == grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    CHECK(still.support[i] == grid.support[i]);
    CHECK(still.masses[i] == doctest::Approx(grid.masses[i]).epsilon(1e-12));
  }

  CHECK_THROWS_AS(w2_interpolate(e2, mu0, mu1, -0.1), Error);
  CHECK_THROWS_AS(w2_interpolate(e2, mu0, mu1, 1.1), Error);
  CHECK_THROWS_AS(w2_interpolate(e2, point_mass({0.0}), mu1, 0.5), InvalidMeasure);
}

TEST_CASE("heisenberg certificate midpoint is constant speed") {
  auto s = heisenberg();
  std::vector<double> a = {0.0, 0.0, 0.0}, b = {1.0, 1.0, 0.0};
  auto cert = distance(s, a, b, SolveOptions::standard());
  CHECK(cert.endpoint_error <= 1e-6);

  auto mid = w2_interpolate(s, point_mass(a), point_mass(b), 0.5);
  REQUIRE(mid.size() == 1);
  double d0 = distance(s, a, mid.support[0], SolveOptions::standard()).value;
  double d1 = distance(s, mid.support[0], b, SolveOptions::standard()).value;
  CHECK(std::abs(d0 - 0.5 * cert.value) <= 0.02 * cert.value);
  CHECK(std::abs(d1 - 0.5 * cert.value) <= 0.02 * cert.value);
}

TEST_CASE("identical measures give zero deficit exactly") {
  auto e2 = euclidean(2);
  auto mu = DiscreteMeasure::uniform_box(rect(0.1, 0.4, 1.2, 0.8), 4);
  auto rep = cd_midpoint_check(e2, mu, mu, 2.0, 0.0);
  CHECK(rep.deficit == 0.0);
  CHECK(rep.S_values[0] == rep.S_values[2]);
  CHECK(rep.S_values[0] == rep.S_values[1]);
  CHECK(rep.transport_cost < 1e-12);
}

TEST_CASE("euclidean midpoint deficit stays within the discretization estimate") {
  auto e2 = euclidean(2);
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> pos(-1.5, 1.5), side(0.6, 1.6);
  for (int trial = 0; trial < 6; ++trial) {
    auto mu0 = DiscreteMeasure::uniform_box(rect(pos(rng), pos(rng), side(rng), side(rng)), 6);
    auto mu1 = DiscreteMeasure::uniform_box(rect(pos(rng), pos(rng), side(rng), side(rng)), 6);
    for (double n : {2.0, 5.0}) {
      auto rep = cd_midpoint_check(e2, mu0, mu1, n, 0.0);
      CAPTURE(trial);
      CAPTURE(n);
      CHECK(rep.deficit <= rep.eps_disc);
    }
  }
}

TEST_CASE("curvature parameter shifts the deficit in the expected direction") {
  auto e2 = euclidean(2);
  auto mu0 = DiscreteMeasure::uniform_box(rect(-1.2, 0.0, 1.0, 1.0), 4);
  auto mu1 = DiscreteMeasure::uniform_box(rect(1.2, 0.0, 1.0, 1.0), 4);

  auto flat = cd_midpoint_check(e2, mu0, mu1, 2.0, 0.0);
  auto neg = cd_midpoint_check(e2, mu0, mu1, 2.0, -1.0);
  auto pos = cd_midpoint_check(e2, mu0, mu1, 2.0, 0.5);
  CHECK(neg.deficit < flat.deficit);
  CHECK(pos.deficit > flat.deficit);
  // Flat space cannot satisfy a positive curvature bound at this separation.
  CHECK(pos.deficit > pos.eps_disc);

  CHECK_THROWS_AS(cd_midpoint_check(e2, mu0, mu1, 2.0, 8.0), Error);
  CHECK_THROWS_AS(cd_midpoint_check(e2, mu0, mu1, 1.0, 0.0), Error);
}

TEST_CASE("violation search stays quiet on flat families") {
  auto e1 = euclidean(1);
  std::vector<std::pair<DiscreteMeasure, DiscreteMeasure>> family;
  family.push_back({gaussian_line(0.0, 0.5, 21), gaussian_line(1.0, 0.8, 21)});
  family.push_back({gaussian_line(-1.0, 1.0, 21), gaussian_line(1.0, 0.6, 21)});
  auto found = violation_search(e1, family, {2.0, 5.0}, 100);
  CHECK(found.empty());

  auto e2 = euclidean(2);
  std::vector<std::pair<DiscreteMeasure, DiscreteMeasure>> squares;
  squares.push_back({DiscreteMeasure::uniform_box(rect(-1, 0, 1, 1), 4),
                     DiscreteMeasure::uniform_box(rect(1, 0, 1, 1), 4)});
  CHECK(violation_search(e2, squares, {2.0}, 10).empty());

  CHECK_THROWS_AS(violation_search(e1, family, {2.0}, 0), Error);
  CHECK_THROWS_AS(violation_search(e1, family, {0.5}, 5), Error);

  // The third pair is oversized and would throw; the budget must stop the
  // sweep before it is ever evaluated.
  auto big = DiscreteMeasure::uniform_box(rect(0, 0, 1, 1), 15);
  squares.push_back({big, big});
  squares.push_back({big, big});
  CHECK_NOTHROW(violation_search(e2, squares, {2.0, 5.0}, 2));
  CHECK_THROWS_AS(violation_search(e2, squares, {2.0, 5.0}, 4), Error);
}

TEST_CASE("ball quadrature cells act as a discrete measure") {
  auto s = heisenberg();
  auto chart = build_privileged(s, {0.0, 0.0, 0.0});
  QuadratureOptions opts;
  opts.per_axis = 7;
  BallQuadrature quad(s, chart, 0.25, opts);
  auto mu = ball_discrete_measure(quad, DensityModel::uniform(), 0.25);
  CHECK_NOTHROW(mu.validate());
  CHECK(mu.size() > 10);
  double total = 0;
  for (double m : mu.masses) total += m;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mu.cell_extents[0].size() == 3);
}

TEST_SUITE_END();
