#pragma once

#include <vector>

#include "sflab/poly.hpp"

namespace sflab {

// Polynomial vector field sum_j comp[j] d/dz_j on an n-dimensional chart.
class PolyVectorField {
 public:
  PolyVectorField() = default;
  explicit PolyVectorField(int nvars) : n_(nvars), comp_(nvars, PolyScalar(nvars)) {}
  explicit PolyVectorField(PolyMap components);

  static PolyVectorField coordinate(int nvars, int i);

  int nvars() const { return n_; }
  bool is_zero() const;
  const PolyScalar& component(int j) const { return comp_[j]; }
  PolyScalar& component(int j) { return comp_[j]; }
  const PolyMap& components() const { return comp_; }

  PolyVectorField operator+(const PolyVectorField& o) const;
  PolyVectorField operator-(const PolyVectorField& o) const;
  PolyVectorField scaled(const Rational& c) const;
  bool operator==(const PolyVectorField& o) const { return comp_ == o.comp_; }

  // X f = sum_j comp[j] * df/dz_j.
  PolyScalar apply(const PolyScalar& f) const;

  std::vector<double> eval(const std::vector<double>& x) const;
  RatPoint eval(const RatPoint& x) const;

  PolyVectorField truncated(int cap) const;

  std::string str(const std::vector<std::string>& names = {}) const;

 private:
  int n_ = 0;
  PolyMap comp_;
};

// [X, Y]^j = X(Y^j) - Y(X^j).
PolyVectorField lie_bracket(const PolyVectorField& x, const PolyVectorField& y);

// min over components j of (weighted degree of comp[j]) - w_j.
// Returns kNegInfinity-safe values: the zero field maps to +infinity
// (represented as std::numeric_limits<long>::max()).
long weighted_order(const PolyVectorField& x, const WeightVector& w);
inline constexpr long kPosInfinity = std::numeric_limits<long>::max();

// Keeps, in component j, the monomials of weighted degree exactly w_j + d.
PolyVectorField weighted_field_part(const PolyVectorField& x, const WeightVector& w, long d);

// Flow map of X up to joint total degree cap in (point, time).
// Result has n components over n+1 variables: 0..n-1 the start point, n the time.
PolyMap truncated_flow(const PolyVectorField& x, int cap);

// Substitutes fixed rational time into a truncated flow, yielding an n -> n map.
PolyMap flow_at_time(const PolyMap& flow, const Rational& t, int cap);

}  // namespace sflab
