#pragma once

#include <functional>

#include "sflab/measure.hpp"

namespace sflab {

using MetricFn =
    std::function<double(const std::vector<double>&, const std::vector<double>&)>;

// Finite carrier for one rescaled pointed metric measure space: blow-up
// coordinates, pairwise rescaled distances, and per-point masses.
struct PointedSample {
  std::vector<std::vector<double>> points;  // dilated privileged coordinates
  int basepoint = 0;
  Eigen::MatrixXd metric;       // entries d/r, min-plus closed
  std::vector<double> weights;  // normalized masses of the grid cells
  std::vector<double> node_volumes;  // blow-up cell volumes, for quadrature
  double r = 0;                 // blow-up scale
  double cap_radius = 0;        // sampled ball radius after rescaling

  int size() const { return static_cast<int>(points.size()); }
  // Symmetry, zero diagonal, triangle inequality, non-negative weights.
  void validate(double triangle_tol = 1e-6) const;
};

// Grid sample of the ball B(q, r*R) pushed through the inverse dilation:
// points delta_{1/r} z, metric d/r, weights from the r-normalized measure.
// grid_size steers how many points the grid yields.
PointedSample blowup_sample(const SubFinslerStructure& s, const DensityModel& d,
                            const std::vector<double>& q, double r, double R,
                            int grid_size, QuadratureOptions opts = {});

// Max over pairs of |sample.metric - tangent metric| at the sample points;
// the blow-up map is already applied, so images are the points themselves.
double distortion(const PointedSample& sample, const MetricFn& tangent);

// One-sided covering: max over tangent points of the tangent distance to the
// nearest sample point, minus eps, floored at zero.
double coverage_defect(const PointedSample& sample,
                       const std::vector<std::vector<double>>& tangent_points,
                       const MetricFn& tangent, double eps);

// Max over test functions of |sum w_i phi(p_i) - m_q int phi|, the integral
// taken over the sample's own grid cells so binning bias cancels.
double measure_discrepancy(const PointedSample& sample, double m_q,
                           const std::vector<std::function<double(const std::vector<double>&)>>& testfns);

// Smallest distortion over all relabelings of equal-size metric matrices
// (exhaustive, at most 8 points). Validates the direct distortion above:
// the identity labeling can never beat this minimum.
double min_bijective_distortion(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// Distance solver wrapped as a metric callable with a cache keyed by point
// pairs, so repeated pairs (shared lattices across radii) solve once.
MetricFn memoized_metric(const SubFinslerStructure& s, SolveOptions opts);

}  // namespace sflab
