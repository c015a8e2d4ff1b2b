#include <cmath>
#include <random>

#include "doctest.h"
#include "sflab/geodesic.hpp"
#include "sflab/nilpotent.hpp"
#include "sflab/pmgh.hpp"

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

double euclid_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Three collinear points, so the Euclidean matrix is already min-plus closed.
PointedSample line_sample() {
  PointedSample s;
  s.points = {{0.0, 0.0}, {1.0, 0.0}, {2.0, 0.0}};
  s.basepoint = 0;
  s.metric = Eigen::MatrixXd::Zero(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s.metric(i, j) = std::abs(i - j);
  s.weights = {0.4, 0.3, 0.3};
  s.node_volumes = {1.0, 1.0, 1.0};
  s.r = 1.0;
  s.cap_radius = 2.0;
  return s;
}

}  // namespace

TEST_SUITE_BEGIN("pmgh");

TEST_CASE("sample validation rejects malformed data") {
  CHECK_NOTHROW(line_sample().validate());

  PointedSample s = line_sample();
  s.metric(0, 1) = 1.5;  // asymmetric
  CHECK_THROWS_AS(s.validate(), Error);

  s = line_sample();
  s.metric(1, 1) = 0.2;
  CHECK_THROWS_AS(s.validate(), Error);

  s = line_sample();
  s.metric(0, 2) = 5.0;
  s.metric(2, 0) = 5.0;  // symmetric but 5 > 1 + 1
  CHECK_THROWS_AS(s.validate(), Error);

  s = line_sample();
  s.weights[2] = -0.1;
  CHECK_THROWS_AS(s.validate(), Error);

  s = line_sample();
  s.weights.pop_back();
  CHECK_THROWS_AS(s.validate(), Error);

  s = line_sample();
  s.basepoint = 7;
  CHECK_THROWS_AS(s.validate(), Error);

  CHECK_THROWS_AS(PointedSample{}.validate(), Error);
}

TEST_CASE("blow-up sampler rejects unusable inputs") {
  auto e2 = euclidean(2);
  auto uni = DensityModel::uniform();
  CHECK_THROWS_AS(blowup_sample(e2, uni, {0.0, 0.0}, 0.0, 1.0, 20), Error);
  CHECK_THROWS_AS(blowup_sample(e2, uni, {0.0, 0.0}, 0.5, -1.0, 20), Error);
  CHECK_THROWS_AS(blowup_sample(e2, uni, {0.0, 0.0}, 0.5, 1.0, 1), Error);
  CHECK_THROWS_AS(blowup_sample(euclidean(4, 2.0), uni, {0.0, 0.0, 0.0, 0.0}, 0.5,
                                1.0, 20),
                  Error);

  auto lying = DensityModel::from_function(
      [](const std::vector<double>& x) { return 0.1 + std::abs(x[0]); }, 0.5, 1.0);
  CHECK_THROWS_AS(blowup_sample(e2, lying, {0.0, 0.0}, 0.5, 1.0, 20), InvalidMeasure);
}

TEST_CASE("planar blow-up reproduces the flat tangent") {
  auto e2 = euclidean(2);
  auto sample = blowup_sample(e2, DensityModel::uniform(), {0.0, 0.0}, 0.5, 1.0, 60);

  CHECK(sample.size() >= 40);
  CHECK(sample.points[sample.basepoint][0] == 0.0);
  CHECK(sample.points[sample.basepoint][1] == 0.0);

  MetricFn flat = euclid_dist;
  CHECK(distortion(sample, flat) < 1e-9);

  double total = 0;
  for (double w : sample.weights) total += w;
  CHECK(total == doctest::Approx(3.0).epsilon(0.02));

  CHECK(coverage_defect(sample, sample.points, flat, 0.0) == 0.0);

  // The reference integral runs over the sample's own cells, so the only
  // residue is the normalization quadrature.
  std::vector<std::function<double(const std::vector<double>&)>> fns;
  fns.push_back([](const std::vector<double>& z) {
    double q = z[0] * z[0] + z[1] * z[1];
    return std::max(0.0, 0.25 - q);
  });
  CHECK(measure_discrepancy(sample, 3.0 / M_PI, fns) < 5e-3);

  fns.clear();
  fns.push_back([](const std::vector<double>& z) {
    return std::max(0.0, euclid_dist(z, {0.0, 0.0}) - 1.3);
  });
  CHECK(measure_discrepancy(sample, 3.0 / M_PI, fns) == 0.0);
}

TEST_CASE("distortion detects a uniform metric shift") {
  auto sample = line_sample();
  MetricFn shifted = [](const std::vector<double>& a, const std::vector<double>& b) {
    return euclid_dist(a, b) + (a == b ? 0.0 : 0.3);
  };
  CHECK(distortion(sample, shifted) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(distortion(sample, euclid_dist) == 0.0);
}

TEST_CASE("coverage defect flags an uncovered region") {
  PointedSample s;
  s.points = {{-0.5, 0.0}, {-1.0, 0.0}};
  s.basepoint = 0;
  s.metric = Eigen::MatrixXd::Zero(2, 2);
  s.metric(0, 1) = s.metric(1, 0) = 0.5;
  s.weights = {0.5, 0.5};
  s.node_volumes = {1.0, 1.0};
  s.r = 1.0;
  s.cap_radius = 1.0;
  s.validate();

  MetricFn flat = euclid_dist;
  CHECK(coverage_defect(s, {{1.0, 0.0}}, flat, 0.1) == doctest::Approx(1.4));
  CHECK(coverage_defect(s, s.points, flat, 0.0) == 0.0);
  CHECK(coverage_defect(s, {{1.0, 0.0}}, flat, 2.0) == 0.0);
  CHECK_THROWS_AS(coverage_defect(s, s.points, flat, -0.5), Error);
}

TEST_CASE("relabeling search recovers a permuted sample") {
  std::mt19937_64 rng(20260816);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < 5; ++i) pts.push_back({unit(rng), unit(rng)});

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(5, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) a(i, j) = euclid_dist(pts[i], pts[j]);

  std::vector<int> perm = {2, 0, 4, 1, 3};
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(5, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) b(i, j) = a(perm[i], perm[j]);

  double naive = (a - b).cwiseAbs().maxCoeff();
  CHECK(naive > 0.05);
  double best = min_bijective_distortion(a, b);
  CHECK(best < 1e-12);
  CHECK(best <= naive);
  CHECK(min_bijective_distortion(a, a) == 0.0);

  CHECK_THROWS_AS(min_bijective_distortion(Eigen::MatrixXd::Zero(9, 9),
                                           Eigen::MatrixXd::Zero(9, 9)),
                  Error);
  CHECK_THROWS_AS(min_bijective_distortion(a, Eigen::MatrixXd::Zero(4, 4)), Error);
}

TEST_CASE("heisenberg quarter-scale metric matches the rescaled structure") {
  auto s = heisenberg();
  auto sample =
      blowup_sample(s, DensityModel::uniform(), {0.0, 0.0, 0.0}, 0.25, 1.0, 20);
  CHECK(sample.size() >= 15);

  auto chart = build_privileged(s, {0.0, 0.0, 0.0});
  auto s_eps = eps_structure(s, chart, Rational(1, 4), safe_z_box(s, chart));

  int far = 0;
  double far_norm = 0;
  for (int i = 0; i < sample.size(); ++i) {
    double v = sample.metric(sample.basepoint, i);
    if (v > far_norm) {
      far_norm = v;
      far = i;
    }
  }
  std::vector<std::pair<int, int>> pairs = {
      {sample.basepoint, far},
      {0, sample.size() - 1},
      {sample.size() / 4, (3 * sample.size()) / 4}};
  for (auto [i, j] : pairs) {
    if (i == j) continue;
    double ref = distance(s_eps, sample.points[i], sample.points[j],
                          SolveOptions::standard())
                     .value;
    CHECK(std::abs(sample.metric(i, j) - ref) <= 0.05 * std::max(ref, 0.02));
  }
}

TEST_CASE("heisenberg blow-ups stay close to the nilpotent tangent") {
  auto s = heisenberg();
  auto uni = DensityModel::uniform();
  std::vector<double> q0 = {0.0, 0.0, 0.0};
  auto chart = build_privileged(s, q0);
  auto nil = nilpotent_approximation(s, chart);
  MetricFn tangent = memoized_metric(nil.structure, SolveOptions::fast());

  auto half = blowup_sample(s, uni, q0, 0.5, 1.0, 25);
  auto quarter = blowup_sample(s, uni, q0, 0.25, 1.0, 25);

  // Quantized box constants are scale free, so the blow-up lattices of the
  // two radii coincide and the memoized tangent solves are shared.
  REQUIRE(half.size() == quarter.size());
  double drift = 0;
  for (int i = 0; i < half.size(); ++i)
    for (int a = 0; a < 3; ++a)
      drift = std::max(drift, std::abs(half.points[i][a] - quarter.points[i][a]));
  CHECK(drift < 1e-12);

  double d_half = distortion(half, tangent);
  double d_quarter = distortion(quarter, tangent);
  CHECK(d_half < 0.05);
  CHECK(d_quarter < 0.05);
  CHECK(d_quarter <= d_half + 0.02);

  std::mt19937_64 rng(0xc0ffee);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<std::vector<double>> targets;
  std::vector<double> origin = {0.0, 0.0, 0.0};
  while (targets.size() < 12) {
    std::vector<double> t = {u(rng), u(rng), 0.1 * u(rng)};
    if (tangent(origin, t) <= 0.85) targets.push_back(std::move(t));
  }
  double c_half = coverage_defect(half, targets, tangent, 0.5);
  double c_quarter = coverage_defect(quarter, targets, tangent, 0.5);
  CHECK(c_half < 0.5);
  CHECK(c_quarter <= c_half + 0.02);

  QuadratureOptions norm_opts;
  norm_opts.per_axis = 9;
  double m_q = tangent_normalization(nil, norm_opts);
  std::vector<std::function<double(const std::vector<double>&)>> fns;
  fns.push_back([](const std::vector<double>& z) {
    double q = z[0] * z[0] + z[1] * z[1] + z[2] * z[2];
    return std::max(0.0, 0.25 - q);
  });
  CHECK(measure_discrepancy(half, m_q, fns) < 0.03);
  CHECK(measure_discrepancy(quarter, m_q, fns) < 0.03);
}

TEST_SUITE_END();
