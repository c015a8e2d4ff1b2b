#pragma once

#include "sflab/structure.hpp"

namespace sflab {

// Piecewise-constant controls on a uniform partition of [0, 1].
struct ControlPath {
  std::vector<std::vector<double>> controls;  // segments x fiber dimension

  int segments() const { return static_cast<int>(controls.size()); }
  void validate(int k) const;  // throws InvalidCurve
};

struct DistanceCertificate {
  double value = 0.0;           // exact-gauge length of the realized path
  double endpoint_error = 0.0;  // Euclidean gap at the target
  bool feasible = false;
  bool exact = false;  // closed-form path (constant frame and norm)
  int segments = 0;
  int starts_used = 0;
  ControlPath controls;
  std::vector<std::vector<double>> trajectory;  // segment boundary states
};

struct SolveOptions {
  int coarse_segments = 8;
  int max_segments = 64;
  int substeps = 2;
  int multistarts = 4;
  int al_rounds = 8;
  int inner_iterations = 60;
  double endpoint_tol = 1e-6;
  double mu0 = 10.0;
  uint64_t seed = 0x51f1abULL;
  bool keep_trajectory = true;
  bool allow_infeasible = false;

  // Bulk preset for dense distance matrices: coarser ladder, fewer starts.
  static SolveOptions fast();
  // Default balanced preset.
  static SolveOptions standard();
  // Tight preset for single benchmark queries.
  static SolveOptions high();
};

// States at the segment boundaries of the controlled flow (RK4).
std::vector<std::vector<double>> integrate(const SubFinslerStructure& s,
                                           const std::vector<double>& q0,
                                           const ControlPath& path, int substeps = 4);

// Length with per-sample minimal-control reduction of the velocity.
double path_length(const SubFinslerStructure& s, const std::vector<double>& q0,
                   const ControlPath& path, int substeps = 4);

// Upper-bound distance certificate between chart points. Throws NoConvergence
// when the endpoint tolerance cannot be met (unless allow_infeasible).
DistanceCertificate distance(const SubFinslerStructure& s, const std::vector<double>& a,
                             const std::vector<double>& b,
                             const SolveOptions& opts = SolveOptions::standard());

}  // namespace sflab
