#pragma once

#include <functional>

#include "sflab/coords.hpp"
#include "sflab/geodesic.hpp"
#include "sflab/nilpotent.hpp"

namespace sflab {

// Chart density with declared two-sided bounds.
struct DensityModel {
  std::function<double(const std::vector<double>&)> rho;
  double lower = 1.0;
  double upper = 1.0;

  static DensityModel uniform();
  static DensityModel from_function(std::function<double(const std::vector<double>&)> f,
                                    double lo, double hi);

  double operator()(const std::vector<double>& x) const { return rho(x); }
  // Spot-checks the declared bounds on seeded samples; throws InvalidMeasure.
  void validate_on(const Box& box, int samples = 200, uint64_t seed = 0xd0d0ULL) const;
};

struct QuadratureOptions {
  int per_axis = 0;          // 0 = auto from the dimension
  double outer_constant = 0;  // 0 = probe each axis; > 0 forces one constant
  int max_enlargements = 4;
  long mc_samples = 4000;  // used when the grid would be 4-dimensional or larger
  SolveOptions solve = SolveOptions::fast();
  SolveOptions retry = SolveOptions::standard();
  uint64_t seed = 0xba11ULL;
};

// Weighted-grid quadrature over one ball center. One distance-solver call is
// cached per grid cell; every radius, density, and integrand after that is a
// cheap pass over the cached values. The ball boundary is antialiased with a
// per-cell occupancy fraction from finite-difference distance gradients, so
// masses are exact-monotone in the radius.
class BallQuadrature {
 public:
  // Ball around chart.center of the given structure.
  BallQuadrature(const SubFinslerStructure& s, const PrivilegedChart& chart,
                 double r_max, QuadratureOptions opts = {});
  // Ball around the origin of a structure whose coordinates are already
  // privileged with the given weights (nilpotent approximations).
  BallQuadrature(const SubFinslerStructure& s, const WeightVector& weights,
                 double r_max, QuadratureOptions opts = {});

  // Integral of rho over B(center, r) against the pushforward measure.
  double mass(const DensityModel& d, double r) const;
  // Integral of |rho - rho_center| over the ball, against chart Lebesgue.
  double deviation_mass(const DensityModel& d, double r, double rho_center) const;
  // Integral of (1 - dist/r) rho over the ball (blow-up normalization).
  double cone_mass(const DensityModel& d, double r) const;
  // Pairing of one test function, evaluated in dilated privileged coordinates
  // delta_{1/r} z, against rho det Lebesgue over the whole cached box. The
  // test function localizes the integral itself; it must vanish where the
  // dilated pseudo-norm exceeds the outer constant.
  double pairing(const DensityModel& d, double r,
                 const std::function<double(const std::vector<double>&)>& phi) const;

  double r_max() const { return r_max_; }
  double outer_constant() const { return c_outer_; }
  // Read access for samplers built on the cached grid.
  const std::vector<double>& cell_z(int i) const { return cells_[i].z; }
  const std::vector<double>& cell_x(int i) const { return cells_[i].x; }
  double cell_distance(int i) const { return cells_[i].dist; }
  // Mass occ * rho * |det| * cellvol the cell contributes to B(center, r).
  double cell_mass(const DensityModel& d, double r, int i) const;
  double cell_volume() const { return cell_volume_; }
  double cell_jacobian(int i) const { return cells_[i].det; }
  // Per-axis lattice spacing; empty under the sampling fallback.
  const std::vector<double>& cell_spacing() const { return steps_; }
  long solver_calls() const { return solver_calls_; }
  int unresolved_cells() const { return unresolved_; }
  int cell_count() const { return static_cast<int>(cells_.size()); }
  const std::string& method() const { return method_; }
  const WeightVector& weights() const { return weights_; }

  // Weighted pseudo-norm max_i |z_i|^{1/w_i} of each cached member of the
  // r-ball, for Ball-Box bracketing scans.
  std::vector<double> member_pseudo_norms(double r) const;
  // Largest c such that every cached cell with pseudo-norm <= c*r is a member.
  double inner_box_scale(double r) const;
  // Members outside the c*r box plus non-members inside the r/c box.
  int box_violation_count(double r, double c_box) const;

 private:
  struct Cell {
    std::vector<double> z;     // privileged coordinates
    std::vector<double> x;     // original chart coordinates
    std::vector<double> grad;  // distance differences along each axis
    std::vector<double> curv;  // second differences along each axis
    double det = 1.0;          // |det D backward|
    double dist = 0.0;         // solver distance to the center
    double delta = 0.0;        // distance half-range over the cell
    bool resolved = true;
  };

  void build(const SubFinslerStructure& s, QuadratureOptions opts);
  double occupancy(const Cell& c, double r) const;
  std::vector<double> to_chart(const std::vector<double>& z) const;

  std::vector<double> center_;
  WeightVector weights_;
  bool identity_chart_ = true;
  PrivilegedChart chart_;  // valid when !identity_chart_
  double r_max_ = 0;
  double c_outer_ = 0;
  std::vector<double> extents_, steps_;
  std::vector<long> strides_;
  int per_axis_ = 0;
  double cell_volume_ = 0;
  std::vector<Cell> cells_;
  long solver_calls_ = 0;
  int unresolved_ = 0;
  std::string method_ = "grid";
};

struct BallMeasureCurve {
  std::vector<double> radii;
  std::vector<double> masses;
  std::string method = "grid";
  long sample_count = 0;
};

// Mass of one ball.
double ball_measure(const SubFinslerStructure& s, const DensityModel& d,
                    const std::vector<double>& q, double r, QuadratureOptions opts = {});

// Masses over a radius sweep, one grid per radius: the probed boxes make the
// grids exact dilates of each other, so the relative quadrature error is the
// same at every radius and log-log slopes come out clean. All densities share
// the per-radius grids; one solver distance per cell covers them all.
std::vector<BallMeasureCurve> ball_measure_curves(const SubFinslerStructure& s,
                                                  const std::vector<DensityModel>& ds,
                                                  const std::vector<double>& q,
                                                  std::vector<double> radii,
                                                  QuadratureOptions opts = {});
BallMeasureCurve ball_measure_curve(const SubFinslerStructure& s, const DensityModel& d,
                                    const std::vector<double>& q,
                                    std::vector<double> radii, QuadratureOptions opts = {});

struct AhlforsFit {
  double q_est = 0;
  double c_est = 0;     // bracketing constant exp(max |log m - Q log r|)
  double residual = 0;  // max log-deviation from the fitted line
};

// Least-squares fit of log m = Q log r + log kappa. Requires >= 4 radii
// spanning at least one dyadic decade; non-monotone masses -> InvalidCurve.
AhlforsFit ahlfors_fit(const BallMeasureCurve& curve);

struct LebesgueReport {
  std::vector<double> radii;
  std::vector<double> deficits;  // r^{-Q} * deviation integral
  double threshold = 0;
  bool is_lebesgue_numeric = false;
};

// Deficit sequence r -> r^{-Q} int_ball |rho - rho(q)| dL^n; certified when
// the sequence is non-increasing and ends below threshold_factor * rho(q)
// times the empirical unit-ball volume coefficient.
LebesgueReport lebesgue_point_check(const SubFinslerStructure& s, const DensityModel& d,
                                    const std::vector<double>& q, std::vector<double> radii,
                                    QuadratureOptions opts = {},
                                    double threshold_factor = 0.1);

// Normalization m(q) = 1 / int_{B-hat(0,1)} (1 - hat distance) dL^n.
double tangent_normalization(const NilpotentStructure& nil, QuadratureOptions opts = {});

struct BallBoxReport {
  double c_box = 0;  // single constant making both inclusions hold
  double c_outer_needed = 0;
  double c_inner_needed = 0;  // box (c*r)^w inside the ball for c below this
  int violations = 0;
  std::vector<double> radii;
};

// Two-sided box bracketing of balls at the chart center over the given radii,
// from one cached grid at max(radii).
BallBoxReport ball_box_check(const SubFinslerStructure& s, const PrivilegedChart& chart,
                             std::vector<double> radii, QuadratureOptions opts = {});

// Pairings int phi d((delta_{1/r})_# m_r^q) for test functions phi given in
// dilated privileged coordinates; normalized by the cone mass.
std::vector<double> blowup_pushforward(
    const SubFinslerStructure& s, const DensityModel& d, const std::vector<double>& q,
    double r, const std::vector<std::function<double(const std::vector<double>&)>>& testfns,
    QuadratureOptions opts = {});

}  // namespace sflab
