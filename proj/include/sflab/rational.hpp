#pragma once

#include <gmpxx.h>

#include <string>
#include <vector>

namespace sflab {

using Rational = mpq_class;
using RatPoint = std::vector<Rational>;

// Parses "p", "-p", "p/q" (arbitrary precision). Throws on malformed input.
Rational rat_parse(const std::string& s);

// Canonical "p" or "p/q" form.
std::string rat_str(const Rational& r);

// r^e for integer e (negative allowed, r != 0 then).
Rational rat_pow(const Rational& r, long e);

inline double rat_double(const Rational& r) { return r.get_d(); }

// Exact: every finite double is a dyadic rational.
inline Rational rat_of_double(double x) { return Rational(x); }

inline RatPoint rat_point(const std::vector<double>& x) {
  RatPoint p;
  p.reserve(x.size());
  for (double v : x) p.emplace_back(rat_of_double(v));
  return p;
}

inline std::vector<double> rat_point_double(const RatPoint& p) {
  std::vector<double> x;
  x.reserve(p.size());
  for (const auto& v : p) x.push_back(v.get_d());
  return x;
}

}  // namespace sflab
