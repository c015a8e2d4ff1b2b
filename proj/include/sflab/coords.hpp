#pragma once

#include <optional>

#include "sflab/structure.hpp"

namespace sflab {

// Polynomial chart adapted to the flag at a point: exponential coordinates
// of the second kind along the adapted frame, truncated at a joint degree
// that leaves every quantity of interest exact.
struct PrivilegedChart {
  std::vector<double> center;
  RatPoint center_exact;
  WeightVector weights;
  FlagReport flag;
  int cap = 0;  // truncation degree, flag.step + slack

  // Maps between centered original coordinates xc = x - center and
  // privileged coordinates z. forward(backward(z)) = z modulo degree > cap.
  PolyMap forward;   // z = forward(xc)
  PolyMap backward;  // xc = backward(z)
  PolyScalar backward_jacobian;  // det D backward, polynomial in z

  // Frame fields written in privileged coordinates.
  std::vector<PolyVectorField> pushed;

  std::vector<double> to_privileged(const std::vector<double>& x) const;
  std::vector<double> from_privileged(const std::vector<double>& z) const;
};

// Minimal word length l with X_{j1} ... X_{jl} f nonzero at q, scanning
// l = 0..cap. Exact rational arithmetic; std::nullopt when every tested
// derivative vanishes (order > cap).
std::optional<int> nonholonomic_order(const SubFinslerStructure& s, const RatPoint& q,
                                      const PolyScalar& f, int cap);

// Builds the chart and certifies ord(z_j) = w_j for every coordinate.
// Throws NotPrivileged when certification fails, HoermanderUndecided when
// the flag cannot be completed.
PrivilegedChart build_privileged(const SubFinslerStructure& s,
                                 const std::vector<double>& q, int extra_cap = 2,
                                 int depth_cap = 6);

// Certification helper shared with tests: checks ord(forward_j) = w_j for a
// candidate centered chart map.
void certify_privileged(const SubFinslerStructure& s, const RatPoint& center,
                        const WeightVector& weights, const PolyMap& forward_centered);

}  // namespace sflab
