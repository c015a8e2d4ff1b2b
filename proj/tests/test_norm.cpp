#include <cmath>
#include <random>

#include "doctest.h"
#include "sflab/norm.hpp"

using namespace sflab;

namespace {

NormFamily grushin_like_quadratic() {
  // G(x, y) = [[1, 0], [0, 1 + x^2]]
  PolyScalar one = PolyScalar::constant(2, Rational(1));
  PolyScalar x = PolyScalar::variable(2, 0);
  std::vector<std::vector<PolyScalar>> g{{one, PolyScalar::zero(2)},
                                         {PolyScalar::zero(2), one + x * x}};
  return NormFamily::quadratic(g);
}

std::vector<std::vector<double>> box_support() {
  return {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
}

void check_grad_fd(const NormFamily& n, const std::vector<double>& q,
                   const std::vector<double>& u, double mu) {
  std::vector<double> g(n.k()), dummy(std::max(n.base_dim(), 1));
  double val = n.smoothed(q.data(), u.data(), mu, g.data(), dummy.data());
  double h = 1e-6;
  for (int i = 0; i < n.k(); ++i) {
    std::vector<double> up = u, um = u;
    up[i] += h;
    um[i] -= h;
    std::vector<double> tmp(n.k());
    double fp = n.smoothed(q.data(), up.data(), mu, tmp.data(), nullptr);
    double fm = n.smoothed(q.data(), um.data(), mu, tmp.data(), nullptr);
    double fd = (fp - fm) / (2 * h);
    CHECK(g[i] == doctest::Approx(fd).epsilon(1e-4));
  }
  (void)val;
}

}  // namespace

TEST_SUITE_BEGIN("norm");

TEST_CASE("lp gauges hit closed forms") {
  auto l2 = NormFamily::lp(2, 2.0);
  auto linf = NormFamily::lp(2, std::numeric_limits<double>::infinity());
  auto l15 = NormFamily::lp(2, 1.5);
  std::vector<double> q;
  CHECK(l2.gauge(q.data(), std::vector<double>{3, 4}.data()) == doctest::Approx(5.0));
  CHECK(linf.gauge(q.data(), std::vector<double>{1, -2}.data()) == doctest::Approx(2.0));
  CHECK(l15.gauge(q.data(), std::vector<double>{1, 1}.data()) ==
        doctest::Approx(std::pow(2.0, 2.0 / 3.0)));
  CHECK(l2.gauge(q.data(), std::vector<double>{0, 0}.data()) == 0.0);
}

TEST_CASE("quadratic gauge varies with base point") {
  auto n = grushin_like_quadratic();
  std::vector<double> q0{0, 0}, q1{1, 0};
  std::vector<double> u{0, 1};
  CHECK(n.gauge(q0, u) == doctest::Approx(1.0));
  CHECK(n.gauge(q1, u) == doctest::Approx(std::sqrt(2.0)));
  CHECK(n.point_dependent());
  CHECK(n.smooth());
}

TEST_CASE("polytope gauge matches box and cross polytope") {
  auto box = NormFamily::polytope(2, box_support(), 0.0);
  std::vector<double> q;
  CHECK(box.gauge(q.data(), std::vector<double>{0.5, -2}.data()) == doctest::Approx(2.0));
  auto cross = NormFamily::polytope(2, {{1, 1}, {1, -1}, {-1, 1}, {-1, -1}}, 0.0);
  CHECK(cross.gauge(q.data(), std::vector<double>{0.5, -2}.data()) == doctest::Approx(2.5));
}

TEST_CASE("smoothed polytope gauge closed form at the corner") {
  double s = 0.5;
  auto rounded = NormFamily::polytope(2, box_support(), s);
  std::vector<double> q;
  double got = rounded.gauge(q.data(), std::vector<double>{1, 1}.data());
  double expect = std::sqrt(2.0) / (std::sqrt(2.0) + s);
  CHECK(got == doctest::Approx(expect).epsilon(1e-9));
  // Along an axis the rounding still shrinks the gauge: t (1 + s) = 1.
  double axis = rounded.gauge(q.data(), std::vector<double>{1, 0}.data());
  CHECK(axis == doctest::Approx(1.0 / (1.0 + s)).epsilon(1e-9));
}

TEST_CASE("subgradient satisfies the euler identity and supporting inequality") {
  std::vector<NormFamily> fams;
  fams.push_back(NormFamily::lp(3, 2.0));
  fams.push_back(NormFamily::lp(3, 1.5));
  fams.push_back(NormFamily::lp(3, std::numeric_limits<double>::infinity()));
  fams.push_back(NormFamily::lp(3, 1.0));
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss;
  std::vector<double> q;
  for (const auto& n : fams) {
    for (int trial = 0; trial < 25; ++trial) {
      std::vector<double> u(3), v(3), g(3);
      for (auto& x : u) x = gauss(rng);
      for (auto& x : v) x = gauss(rng);
      double fu = n.gauge_subgrad(q.data(), u.data(), g.data());
      double dot_u = 0, dot_v = 0;
      for (int i = 0; i < 3; ++i) {
        dot_u += g[i] * u[i];
        dot_v += g[i] * v[i];
      }
      CHECK(dot_u == doctest::Approx(fu).epsilon(1e-9));
      double fv = n.gauge(q.data(), v.data());
      CHECK(fv + 1e-9 >= fu + (dot_v - dot_u));
    }
  }
}

TEST_CASE("smoothed surrogates stay close and have exact gradients") {
  std::vector<double> q;
  double mu = 1e-3;
  auto linf = NormFamily::lp(2, std::numeric_limits<double>::infinity());
  auto l1 = NormFamily::lp(2, 1.0);
  auto l15 = NormFamily::lp(2, 1.5);
  auto cross = NormFamily::polytope(2, {{1, 1}, {1, -1}, {-1, 1}, {-1, -1}}, 0.0);
  for (const auto* n : {&linf, &l1, &l15, &cross}) {
    std::vector<double> u{0.7, -0.4}, g(2);
    double sm = n->smoothed(q.data(), u.data(), mu, g.data(), nullptr);
    double ex = n->gauge(q.data(), u.data());
    CHECK(std::fabs(sm - ex) < 20 * mu);
    check_grad_fd(*n, q, u, mu);
  }
  // Quadratic with base gradient.
  auto quad = grushin_like_quadratic();
  std::vector<double> qq{0.3, -0.2}, u{0.5, 1.1}, g(2), gq(2);
  quad.smoothed(qq.data(), u.data(), 0.0, g.data(), gq.data());
  double h = 1e-6;
  for (int m = 0; m < 2; ++m) {
    auto qp = qq, qm = qq;
    qp[m] += h;
    qm[m] -= h;
    double fp = quad.gauge(qp, u), fm = quad.gauge(qm, u);
    CHECK(gq[m] == doctest::Approx((fp - fm) / (2 * h)).epsilon(1e-4));
  }
  check_grad_fd(quad, qq, u, 0.0);
}

TEST_CASE("freeze and precompose are exact") {
  auto quad = grushin_like_quadratic();
  RatPoint q{rat_parse("1/2"), rat_parse("0")};
  auto frozen = quad.frozen_at(q);
  CHECK(!frozen.point_dependent());
  std::vector<double> qd{0.5, 0.0}, anywhere{9.0, 9.0}, u{0, 1};
  CHECK(frozen.gauge(anywhere, u) == doctest::Approx(quad.gauge(qd, u)));
  // Precompose with the squaring map (x, y) -> (x^2, y).
  PolyMap sq{PolyScalar::variable(2, 0) * PolyScalar::variable(2, 0),
             PolyScalar::variable(2, 1)};
  auto pre = quad.precomposed(sq);
  std::vector<double> base{2.0, 0.0}, mapped{4.0, 0.0};
  CHECK(pre.gauge(base, u) == doctest::Approx(quad.gauge(mapped, u)));
}

TEST_CASE("validation accepts good families and rejects bad ones") {
  std::vector<double> q0{0.0, 0.0};
  NormFamily::lp(2, 2.0).validate(q0, 50, 11);
  grushin_like_quadratic().validate(q0, 50, 11);
  NormFamily::polytope(2, box_support(), 0.25).validate(q0, 50, 11);
  CHECK_THROWS_AS(NormFamily::lp(2, 0.5), Error);
  CHECK_THROWS_AS(NormFamily::polytope(2, {{1, 0}, {0, 1}}, 0.0).validate(q0, 50, 11),
                  Error);
  // Indefinite quadratic form.
  PolyScalar one = PolyScalar::constant(1, Rational(1));
  std::vector<std::vector<PolyScalar>> bad{{one, PolyScalar::zero(1)},
                                           {PolyScalar::zero(1), -one}};
  CHECK_THROWS_AS(NormFamily::quadratic(bad).validate({0.0}, 50, 11), Error);
}

TEST_SUITE_END();
