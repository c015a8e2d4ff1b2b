#pragma once

#include <array>

#include "sflab/geodesic.hpp"
#include "sflab/measure.hpp"

namespace sflab {

// Finitely supported probability measure with per-point reference volumes.
// cell_extents optionally records the axis footprint of each cell; when
// absent, a cube of the matching volume is assumed.
struct DiscreteMeasure {
  std::vector<std::vector<double>> support;
  std::vector<double> masses;
  std::vector<double> cell_volumes;
  std::vector<std::vector<double>> cell_extents;

  int size() const { return static_cast<int>(support.size()); }
  int dimension() const { return support.empty() ? 0 : static_cast<int>(support[0].size()); }
  void validate() const;  // InvalidMeasure on any broken invariant
  std::vector<double> extent(int i) const;

  // Uniform probability on an axis box, carried by per_axis^n equal cells.
  static DiscreteMeasure uniform_box(const Box& region, int per_axis);
};

// S_N(mu | m) = -sum_i (mass_i / vol_i)^{1 - 1/N} vol_i, the Renyi entropy
// of the piecewise-constant density against the reference volumes.
double renyi_entropy(const DiscreteMeasure& mu, double N);

struct TransportPlan {
  std::vector<int> from;
  std::vector<int> to;
  std::vector<double> mass;
  double cost = 0;  // sum of mass * cost matrix entries

  int entries() const { return static_cast<int>(mass.size()); }
};

// Exact optimal transport between weighted supports (successive shortest
// augmenting paths with potentials). Supports are limited to 200 points.
TransportPlan optimal_transport(const Eigen::MatrixXd& cost,
                                const std::vector<double>& supply,
                                const std::vector<double>& demand);

// Displacement interpolation: optimal plan under squared solver distance,
// mass placed at the constant-speed parameter t along certificate paths.
// t = 0 and t = 1 return the endpoints unchanged.
DiscreteMeasure w2_interpolate(const SubFinslerStructure& s, const DiscreteMeasure& mu0,
                               const DiscreteMeasure& mu1, double t,
                               const SolveOptions& opts = SolveOptions::standard());

struct EntropyReport {
  double N = 0;
  double K = 0;
  std::array<double, 3> S_values{};  // entropy at t = 0, 1/2, 1 on the shared grid
  double deficit = 0;
  double eps_disc = 0;  // discretization error estimate for the deficit
  double transport_cost = 0;
};

struct CdOptions {
  int bins = 0;  // shared rebinning resolution per axis; 0 picks by dimension
  SolveOptions solve = SolveOptions::standard();
};

// Midpoint entropy-convexity check. All three entropies are evaluated after
// depositing the measures onto one shared grid, so binning bias cancels
// between the midpoint and the endpoints; for K = 0 the deficit is
// S(mu_half) - (S(mu_0) + S(mu_1))/2, and K != 0 adds the distortion
// correction with coefficients tau built from the plan distances. The
// estimate eps_disc compares the deficit across two grid resolutions.
EntropyReport cd_midpoint_check(const SubFinslerStructure& s, const DiscreteMeasure& mu0,
                                const DiscreteMeasure& mu1, double N, double K = 0.0,
                                CdOptions opts = {});

struct ViolationInstance {
  int pair = 0;
  double N = 0;
  EntropyReport report;
};

// Exploratory sweep at K = 0: evaluates the midpoint check over pairs and
// dimension parameters (at most budget evaluations, pair-major order) and
// returns instances whose deficit exceeds its own error estimate, ranked by
// deficit. An empty result is a valid outcome.
std::vector<ViolationInstance> violation_search(
    const SubFinslerStructure& s,
    const std::vector<std::pair<DiscreteMeasure, DiscreteMeasure>>& family,
    const std::vector<double>& n_grid, int budget, CdOptions opts = {});

// Ball of the cached quadrature as a discrete measure: member cells with
// their normalized masses, chart-point supports, and grid footprints.
DiscreteMeasure ball_discrete_measure(const BallQuadrature& quad,
                                      const DensityModel& den, double r);

}  // namespace sflab
