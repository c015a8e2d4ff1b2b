#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "sflab/norm.hpp"
#include "sflab/vectorfield.hpp"

namespace sflab {

// Axis-aligned chart domain.
struct Box {
  std::vector<double> lo, hi;

  Box() = default;
  Box(std::vector<double> l, std::vector<double> h);
  static Box cube(int n, double half_width);

  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const std::vector<double>& x, double slack = 0.0) const;
  double diameter() const;
};

// Frame fields plus their first partials, with double coefficients, for
// tight numeric loops.
struct CompiledFrame {
  int n = 0, k = 0;
  // comp[i][j]: component j of field i; dcomp[i][j][m]: its z_m partial.
  std::vector<std::vector<CompiledPoly>> comp;
  std::vector<std::vector<std::vector<CompiledPoly>>> dcomp;

  static CompiledFrame from(const std::vector<PolyVectorField>& fields);

  // A(j, i) = comp[i][j](z).
  void frame(const double* z, Eigen::MatrixXd& a) const;
  // out = A(z) u.
  void apply(const double* z, const double* u, double* out) const;
  // out = A(z)^T v.
  void apply_t(const double* z, const double* v, double* out) const;
  // outm = (d/dz_m sum_i u_i X_i^j(z))_{j m} transposed times lambda:
  // out[m] = sum_j lambda_j * d f^j / dz_m.
  void jacobian_t_vec(const double* z, const double* u, const double* lambda,
                      double* out) const;
};

struct BracketEntry {
  std::vector<int> word;  // [i0, i1, ..., im] means [X_{i0}, [X_{i1}, [... X_{im}]]]
  PolyVectorField field;
  std::vector<CompiledPoly> compiled;
};

struct FlagReport {
  std::vector<int> growth;  // ranks n_1 <= ... <= n_step = n
  WeightVector weights;
  int step = 0;
  long homogeneous_dimension = 0;
  bool regular = false;
  std::vector<std::vector<int>> adapted_words;
  std::vector<PolyVectorField> adapted_frame;
};

class SubFinslerStructure {
 public:
  SubFinslerStructure(std::vector<PolyVectorField> fields, NormFamily norm, Box chart_box,
                      std::string name = "");

  int dimension() const { return n_; }
  int fiber_dimension() const { return k_; }
  const std::vector<PolyVectorField>& fields() const { return fields_; }
  const NormFamily& norm() const { return norm_; }
  const Box& chart_box() const { return box_; }
  const std::string& name() const { return name_; }
  const CompiledFrame& compiled() const { return *frame_; }

  void frame_matrix(const std::vector<double>& q, Eigen::MatrixXd& a) const;

  // Left-normed bracket levels 1..depth (level index 0 holds the generators).
  // Identically-zero fields are kept out; returns levels.size() <= depth slices.
  const std::vector<std::vector<BracketEntry>>& bracket_levels(int depth) const;
  // True when some complete level vanished identically (lower central series
  // terminated) at or before the given depth.
  bool series_terminated(int depth) const;

  SubFinslerStructure with_fields(std::vector<PolyVectorField> fields,
                                  std::string name) const;
  SubFinslerStructure with_norm(NormFamily norm, std::string name) const;

 private:
  struct BracketCache {
    std::mutex mu;
    std::vector<std::vector<BracketEntry>> levels;
    int depth_built = 0;
    bool terminated = false;
  };

  int n_, k_;
  std::vector<PolyVectorField> fields_;
  NormFamily norm_;
  Box box_;
  std::string name_;
  std::shared_ptr<CompiledFrame> frame_;
  // Copies share the cache; the fields it derives from are immutable.
  std::shared_ptr<BracketCache> brackets_;
};

// Flag of the distribution at q: growth vector, weights, step, adapted frame.
// Throws HoermanderUndecided when rank n is not reached by depth_cap.
FlagReport flag_at(const SubFinslerStructure& s, const std::vector<double>& q,
                   int depth_cap = 6, double svd_tol = 1e-9);

int rank_at(const SubFinslerStructure& s, const std::vector<double>& q,
            double svd_tol = 1e-9);

// Compares growth vectors on seeded samples in the given ball around q.
bool regularity_scan(const SubFinslerStructure& s, const std::vector<double>& q,
                     double radius, int samples, int depth_cap = 6,
                     uint64_t seed = 0x5eedULL);

// Norm of v in the induced fiber norm at q: inf of |u|_q over A(q) u = v.
// Fills *control with the minimizing preimage when requested.
// Throws NotHorizontal when v is outside the span of the frame at q.
double induced_norm(const SubFinslerStructure& s, const std::vector<double>& q,
                    const std::vector<double>& v, std::vector<double>* control = nullptr);

}  // namespace sflab
