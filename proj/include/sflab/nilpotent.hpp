#pragma once

#include "sflab/coords.hpp"

namespace sflab {

// Anisotropic dilations z_i -> eps^{w_i} z_i.
struct DilationFamily {
  WeightVector weights;

  DilationFamily() = default;
  explicit DilationFamily(WeightVector w) : weights(std::move(w)) {}

  std::vector<double> apply(const std::vector<double>& z, double eps) const;
  RatPoint apply(const RatPoint& z, const Rational& eps) const;
  PolyMap as_map(const Rational& eps) const;
  Box apply(const Box& b, double eps) const;
  long homogeneous_dimension() const { return weights.homogeneous_dimension(); }
};

// eps * (pushforward of y under delta_{1/eps}): the monomial c z^a in
// component j picks up the factor eps^(1 - w_j + <w, a>). Exact.
PolyVectorField dilate_field(const PolyVectorField& y, const WeightVector& w,
                             const Rational& eps);

// Weighted-degree -1 part of a field (its dilation limit).
PolyVectorField hat_part(const PolyVectorField& y, const WeightVector& w);

// True when every monomial sits exactly in weighted degree -1, i.e. the
// field is invariant under eps * delta_{1/eps} pushforward for all eps.
bool is_degree_minus_one(const PolyVectorField& y, const WeightVector& w);

struct NilpotentStructure {
  explicit NilpotentStructure(SubFinslerStructure hat) : structure(std::move(hat)) {}

  SubFinslerStructure structure;  // hat frame, norm frozen at the chart center
  WeightVector weights;
  int step = 0;
  DilationFamily dilations;

  // Basis of the Lie algebra generated by the hat frame (left-normed bracket
  // fields in generation order), bracket word lengths, and structure
  // constants [basis_a, basis_b] = sum_m table[a][b][m] basis_m.
  std::vector<PolyVectorField> algebra_basis;
  std::vector<std::vector<int>> basis_words;
  std::vector<std::vector<std::vector<Rational>>> bracket_table;
  int algebra_dimension = 0;
  int center_dimension = 0;
};

// Dilation limit of the chart frame with full certification:
// NotApproximable when some monomial sits below weighted degree -1,
// StepMismatch when the limit algebra's growth disagrees with the flag.
NilpotentStructure nilpotent_approximation(const SubFinslerStructure& s,
                                           const PrivilegedChart& chart,
                                           double box_half_width = 64.0);

// Largest t such that the anisotropic box {|z_i| <= t^{w_i} * scale_i} maps
// into the structure's chart box under the backward map; scale_i is the
// available half-width at the center. Sampled on box faces, deterministic.
Box safe_z_box(const SubFinslerStructure& s, const PrivilegedChart& chart);

// Rescaled structure on the privileged chart: frame eps * delta_{1/eps*} Y_i,
// norm based at the dilated preimage, chart box dilated by 1/eps. Exact in
// the rational eps.
SubFinslerStructure eps_structure(const SubFinslerStructure& s,
                                  const PrivilegedChart& chart, const Rational& eps,
                                  const Box& z_box);

}  // namespace sflab
