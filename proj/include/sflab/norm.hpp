#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "sflab/poly.hpp"

namespace sflab {

enum class NormKind { LP, Quadratic, Polytope };

// Family of fiber norms |.|_q on R^k, polynomially varying with the base
// point q. The gauge is positively 1-homogeneous and convex in u.
class NormFamily {
 public:
  // p >= 1, infinity allowed.
  static NormFamily lp(int k, double p);
  // g: k x k symmetric matrix of polynomials in the base variables,
  // positive definite on the chart of interest.
  static NormFamily quadratic(std::vector<std::vector<PolyScalar>> g);
  // Unit ball {x : <a_j, x> <= 1 for all j}; the a_j must positively span,
  // smoothing >= 0 rounds the ball by a Euclidean ball of that radius.
  static NormFamily polytope(int k, std::vector<std::vector<double>> support,
                             double smoothing);

  int k() const { return k_; }
  int base_dim() const { return base_dim_; }
  NormKind kind() const { return kind_; }
  double lp_exponent() const { return p_; }
  double smoothing() const { return smoothing_; }
  const std::vector<std::vector<PolyScalar>>& quad_entries() const { return quad_; }
  const std::vector<std::vector<double>>& support_vectors() const { return support_; }

  bool point_dependent() const;
  // Differentiable away from u = 0.
  bool smooth() const;

  double gauge(const double* q, const double* u) const;
  double gauge(const std::vector<double>& q, const std::vector<double>& u) const {
    return gauge(q.data(), u.data());
  }
  // Returns the gauge value and writes one subgradient in u.
  double gauge_subgrad(const double* q, const double* u, double* grad_u) const;
  // Smooth surrogate within O(mu) of the gauge, with gradients in u and q
  // (grad_q may be null; it is only nonzero for Quadratic families).
  double smoothed(const double* q, const double* u, double mu, double* grad_u,
                  double* grad_q) const;

  // Exact specialization to a fixed base point (family becomes constant).
  NormFamily frozen_at(const RatPoint& q) const;
  // Exact precomposition of the base dependence with a polynomial map.
  NormFamily precomposed(const PolyMap& base_map) const;

  // Spot checks: positivity, homogeneity, midpoint convexity on seeded
  // samples. Throws Error on violation.
  void validate(const std::vector<double>& q, int ndirections, uint64_t seed) const;

 private:
  NormFamily() = default;
  void compile();

  int k_ = 0;
  int base_dim_ = 0;
  NormKind kind_ = NormKind::LP;
  double p_ = 2.0;
  std::vector<std::vector<PolyScalar>> quad_;
  std::vector<std::vector<double>> support_;
  double smoothing_ = 0.0;

  struct Compiled;
  std::shared_ptr<const Compiled> compiled_;
};

}  // namespace sflab
