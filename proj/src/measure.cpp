#include "sflab/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "sflab/errors.hpp"
#include "sflab/parallel.hpp"

namespace sflab {

namespace {

constexpr double kFar = std::numeric_limits<double>::infinity();

int auto_per_axis(int n) {
  if (n <= 1) return 129;
  if (n == 2) return 33;
  return 17;
}

double clamp01(double t) { return t < 0 ? 0 : (t > 1 ? 1 : t); }

double dist2(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Sampled bound on the Euclidean speed of unit-gauge paths: max |A(x) u| over
// the given points and unit-ball controls, with a safety margin. Used only to
// skip solves for cells far outside the ball.
double speed_bound(const SubFinslerStructure& s,
                   const std::vector<std::vector<double>>& pts) {
  const int k = s.fiber_dimension();
  std::mt19937_64 rng(0x5eedb0b5ULL);
  std::normal_distribution<double> gauss;
  std::vector<std::vector<double>> dirs;
  for (int i = 0; i < k; ++i) {
    std::vector<double> e(k, 0.0);
    e[i] = 1.0;
    dirs.push_back(e);
    e[i] = -1.0;
    dirs.push_back(e);
  }
  for (int t = 0; t < 32; ++t) {
    std::vector<double> v(k);
    double nn = 0;
    for (double& c : v) {
      c = gauss(rng);
      nn += c * c;
    }
    nn = std::sqrt(nn);
    if (nn < 1e-12) continue;
    for (double& c : v) c /= nn;
    dirs.push_back(v);
  }
  double la = 0, lu = 0;
  Eigen::MatrixXd a;
  for (const auto& x : pts) {
    s.frame_matrix(x, a);
    la = std::max(la, a.norm());
    for (const auto& v : dirs) {
      double g = s.norm().gauge(x, v);
      if (g > 1e-12) lu = std::max(lu, 1.0 / g);
    }
  }
  return la * lu * 1.3;
}

// Points with every coordinate in {-e_i, 0, +e_i}, optionally pinning one
// axis to a fixed value.
void corner_lattice(const std::vector<double>& ext, int pin_axis, double pin_value,
                    std::vector<std::vector<double>>& out) {
  const int n = static_cast<int>(ext.size());
  long total = 1;
  for (int i = 0; i < n; ++i)
    if (i != pin_axis) total *= 3;
  for (long idx = 0; idx < total; ++idx) {
    std::vector<double> z(n);
    long rem = idx;
    for (int i = 0; i < n; ++i) {
      if (i == pin_axis) {
        z[i] = pin_value;
        continue;
      }
      z[i] = (static_cast<double>(rem % 3) - 1.0) * ext[i];
      rem /= 3;
    }
    out.push_back(std::move(z));
  }
}

}  // namespace

DensityModel DensityModel::uniform() {
  DensityModel d;
  d.rho = [](const std::vector<double>&) { return 1.0; };
  d.lower = d.upper = 1.0;
  return d;
}

DensityModel DensityModel::from_function(
    std::function<double(const std::vector<double>&)> f, double lo, double hi) {
  if (!(lo > 0) || !(hi >= lo) || !std::isfinite(hi))
    throw InvalidMeasure("density bounds must satisfy 0 < lower <= upper < infinity");
  DensityModel d;
  d.rho = std::move(f);
  d.lower = lo;
  d.upper = hi;
  return d;
}

void DensityModel::validate_on(const Box& box, int samples, uint64_t seed) const {
  if (!rho) throw InvalidMeasure("density has no function attached");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> x(box.dim());
  for (int t = 0; t < samples; ++t) {
    for (int i = 0; i < box.dim(); ++i)
      x[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * unit(rng);
    double v = rho(x);
    double tol = 1e-9 * (1.0 + std::abs(upper));
    if (!std::isfinite(v) || v < lower - tol || v > upper + tol)
      throw InvalidMeasure("density sample " + std::to_string(v) +
                           " violates declared bounds [" + std::to_string(lower) +
                           ", " + std::to_string(upper) + "]");
  }
}

BallQuadrature::BallQuadrature(const SubFinslerStructure& s, const PrivilegedChart& chart,
                               double r_max, QuadratureOptions opts)
    : center_(chart.center),
      weights_(chart.weights),
      identity_chart_(false),
      chart_(chart),
      r_max_(r_max) {
  build(s, std::move(opts));
}

BallQuadrature::BallQuadrature(const SubFinslerStructure& s, const WeightVector& weights,
                               double r_max, QuadratureOptions opts)
    : center_(s.dimension(), 0.0),
      weights_(weights),
      identity_chart_(true),
      r_max_(r_max) {
  build(s, std::move(opts));
}

std::vector<double> BallQuadrature::to_chart(const std::vector<double>& z) const {
  return identity_chart_ ? z : chart_.from_privileged(z);
}

void BallQuadrature::build(const SubFinslerStructure& s, QuadratureOptions opts) {
  const int n = s.dimension();
  if (weights_.dim() != n) throw Error("weights do not match the structure dimension");
  if (!(r_max_ > 0) || !std::isfinite(r_max_)) throw Error("ball radius must be positive");
  const bool mc = n >= 4;
  method_ = mc ? "monte-carlo" : "grid";
  per_axis_ = opts.per_axis > 0 ? opts.per_axis : auto_per_axis(n);
  if (!mc && per_axis_ < 3) throw Error("per-axis resolution below 3");

  CompiledPoly jac;
  if (!identity_chart_) jac = CompiledPoly::from(chart_.backward_jacobian);

  SolveOptions bulk = opts.solve;
  bulk.allow_infeasible = true;
  bulk.keep_trajectory = false;
  SolveOptions careful = opts.retry;
  careful.allow_infeasible = true;
  careful.keep_trajectory = false;

  const double slack = 1e-9 * (1.0 + s.chart_box().diameter());
  extents_.assign(n, 0.0);

  auto probe_dist = [&](const std::vector<double>& z) {
    auto x = to_chart(z);
    if (!s.chart_box().contains(x, slack)) return kFar;
    auto cert = distance(s, center_, x, bulk);
    ++solver_calls_;
    if (!cert.feasible) {
      cert = distance(s, center_, x, careful);
      ++solver_calls_;
    }
    return cert.feasible ? cert.value : kFar;
  };

  // Per-axis box constants: extents (C_a r)^{w_a}. A single constant wastes
  // resolution badly on high-weight axes (the ball is far thinner there than
  // any isotropic box), so each axis gets its reach probed by bisection. The
  // constants are rounded up to quarter octaves, which keeps the grids of
  // dilated balls exact dilates of each other.
  const double thresh = 1.02 * r_max_;
  std::vector<double> c_axis(n, opts.outer_constant);
  if (!(opts.outer_constant > 0)) {
    for (int a = 0; a < n; ++a) {
      const double wa = static_cast<double>(weights_.w[a]);
      std::vector<double> z(n, 0.0);
      double lo = 0.0, hi = std::pow(0.25 * r_max_, wa);
      for (int step = 0; step < 40; ++step) {
        z[a] = hi;
        if (!(probe_dist(z) <= thresh)) break;
        lo = hi;
        hi *= 2.0;
      }
      for (int it = 0; it < 10; ++it) {
        z[a] = 0.5 * (lo + hi);
        (probe_dist(z) <= thresh ? lo : hi) = z[a];
      }
      double c = 1.2 * std::pow(hi, 1.0 / wa) / r_max_;
      c_axis[a] = std::pow(2.0, std::ceil(4.0 * std::log2(c) - 1e-9) / 4.0);
    }
  }

  // Certify the box: every face must sit outside the ball, so no mass can be
  // missed; any face too close pushes its axis outward.
  double prune = 0;
  for (int attempt = 0;; ++attempt) {
    for (int i = 0; i < n; ++i) extents_[i] = std::pow(c_axis[i] * r_max_, weights_.w[i]);

    std::vector<std::vector<double>> lattice;
    corner_lattice(extents_, -1, 0.0, lattice);
    std::vector<std::vector<double>> mapped;
    mapped.reserve(lattice.size());
    for (const auto& z : lattice) {
      auto x = to_chart(z);
      if (!s.chart_box().contains(x, slack))
        throw OutOfChart("outer box for radius " + std::to_string(r_max_) +
                         " leaves the chart domain");
      mapped.push_back(std::move(x));
    }
    prune = speed_bound(s, mapped);

    std::vector<char> axis_ok(n, 1);
    for (int a = 0; a < n; ++a) {
      for (int sign = -1; sign <= 1 && axis_ok[a]; sign += 2) {
        std::vector<std::vector<double>> face;
        corner_lattice(extents_, a, sign * extents_[a], face);
        for (const auto& z : face) {
          if (dist2(to_chart(z), center_) > prune * r_max_ * 1.05) continue;
          if (!(probe_dist(z) > thresh)) {
            axis_ok[a] = 0;
            break;
          }
        }
      }
    }
    bool all_ok = true;
    for (int a = 0; a < n; ++a)
      if (!axis_ok[a]) all_ok = false;
    if (all_ok) break;
    if (attempt >= 2 * opts.max_enlargements)
      throw Error("could not certify an outer box containing the ball");
    for (int a = 0; a < n; ++a)
      if (!axis_ok[a]) c_axis[a] *= 1.5;
  }
  c_outer_ = *std::min_element(c_axis.begin(), c_axis.end());

  long total;
  if (!mc) {
    strides_.assign(n, 1);
    for (int a = n - 2; a >= 0; --a) strides_[a] = strides_[a + 1] * per_axis_;
    total = strides_[0] * per_axis_;
    steps_.resize(n);
    cell_volume_ = 1.0;
    for (int i = 0; i < n; ++i) {
      steps_[i] = 2.0 * extents_[i] / per_axis_;
      cell_volume_ *= steps_[i];
    }
    cells_.assign(total, Cell{});
    for (long idx = 0; idx < total; ++idx) {
      Cell& cell = cells_[idx];
      cell.z.resize(n);
      for (int a = 0; a < n; ++a) {
        long c = (idx / strides_[a]) % per_axis_;
        cell.z[a] = -extents_[a] + (static_cast<double>(c) + 0.5) * steps_[a];
      }
    }
  } else {
    total = opts.mc_samples;
    cell_volume_ = 1.0;
    for (int i = 0; i < n; ++i) cell_volume_ *= 2.0 * extents_[i];
    cell_volume_ /= static_cast<double>(total);
    cells_.assign(total, Cell{});
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (auto& cell : cells_) {
      cell.z.resize(n);
      for (int a = 0; a < n; ++a) cell.z[a] = extents_[a] * unit(rng);
    }
  }

  std::vector<char> solves(total, 0);
  const Box& box = s.chart_box();
  parallel_for(0, total, [&](long idx) {
    Cell& cell = cells_[idx];
    cell.x = to_chart(cell.z);
    cell.det = identity_chart_ ? 1.0 : std::abs(jac.eval(cell.z.data()));
    if (!box.contains(cell.x, slack)) {
      cell.dist = kFar;
      cell.resolved = false;
      return;
    }
    if (dist2(cell.x, center_) > prune * r_max_ * 1.02) {
      cell.dist = kFar;
      return;
    }
    auto cert = distance(s, center_, cell.x, bulk);
    solves[idx] = 1;
    if (!cert.feasible) {
      cert = distance(s, center_, cell.x, careful);
      solves[idx] = 2;
    }
    if (cert.feasible) {
      cell.dist = cert.value;
    } else {
      cell.dist = cert.endpoint_error <= 0.1 * r_max_ ? cert.value : kFar;
      cell.resolved = false;
    }
  });
  for (long idx = 0; idx < total; ++idx) {
    solver_calls_ += solves[idx];
    if (!cells_[idx].resolved) ++unresolved_;
  }

  if (mc) return;

  // Per-cell distance model from neighbor differences: gradient for boundary
  // antialiasing, diagonal curvature so convex boundaries are not overcounted.
  // Cells whose neighbors are all unavailable fall back to a sharp indicator.
  for (long idx = 0; idx < total; ++idx) {
    Cell& cell = cells_[idx];
    if (!std::isfinite(cell.dist)) continue;
    cell.grad.assign(n, 0.0);
    cell.curv.assign(n, 0.0);
    double delta = 0;
    for (int a = 0; a < n; ++a) {
      long c = (idx / strides_[a]) % per_axis_;
      double dp = kFar, dm = kFar;
      if (c + 1 < per_axis_) dp = cells_[idx + strides_[a]].dist;
      if (c > 0) dm = cells_[idx - strides_[a]].dist;
      double grad = 0;
      bool fp = std::isfinite(dp), fm = std::isfinite(dm);
      if (fp && fm) {
        grad = (dp - dm) / (2.0 * steps_[a]);
        cell.curv[a] = (dp - 2.0 * cell.dist + dm) / (steps_[a] * steps_[a]);
      } else if (fp) {
        grad = (dp - cell.dist) / steps_[a];
      } else if (fm) {
        grad = (cell.dist - dm) / steps_[a];
      }
      cell.grad[a] = grad;
      delta += 0.5 * steps_[a] * std::abs(grad);
    }
    if (cell.dist > 0) delta = std::min(delta, 0.5 * cell.dist);
    cell.delta = delta;
  }
}

double BallQuadrature::occupancy(const Cell& c, double r) const {
  if (!std::isfinite(c.dist)) return 0.0;
  if (c.delta <= 0) return c.dist <= r ? 1.0 : 0.0;
  if (c.grad.empty()) return clamp01(0.5 + (r - c.dist) / (2.0 * c.delta));
  // Average the ramp over 3^n subcells of a quadratic distance model; the
  // curvature term keeps convex boundary cells from being overcounted.
  const int n = static_cast<int>(c.grad.size());
  long total = 1;
  for (int a = 0; a < n; ++a) total *= 3;
  const double sub_delta = 2.0 * c.delta / 3.0;
  double acc = 0;
  for (long idx = 0; idx < total; ++idx) {
    double ds = c.dist;
    long rem = idx;
    for (int a = 0; a < n; ++a) {
      double off = (static_cast<double>(rem % 3) - 1.0) * steps_[a] / 3.0;
      rem /= 3;
      ds += c.grad[a] * off + 0.5 * c.curv[a] * off * off;
    }
    acc += clamp01(0.5 + (r - ds) / sub_delta);
  }
  return acc / static_cast<double>(total);
}

namespace {
void check_radius(double r, double r_max) {
  if (!(r > 0) || r > r_max * (1.0 + 1e-9))
    throw Error("radius " + std::to_string(r) + " outside the cached range (max " +
                std::to_string(r_max) + ")");
}
}  // namespace

double BallQuadrature::cell_mass(const DensityModel& d, double r, int i) const {
  check_radius(r, r_max_);
  const Cell& c = cells_[i];
  double occ = occupancy(c, r);
  return occ > 0 ? occ * d(c.x) * c.det * cell_volume_ : 0.0;
}

double BallQuadrature::mass(const DensityModel& d, double r) const {
  check_radius(r, r_max_);
  double total = 0;
  for (const auto& c : cells_) {
    double occ = occupancy(c, r);
    if (occ > 0) total += occ * d(c.x) * c.det;
  }
  return total * cell_volume_;
}

double BallQuadrature::deviation_mass(const DensityModel& d, double r,
                                      double rho_center) const {
  check_radius(r, r_max_);
  double total = 0;
  for (const auto& c : cells_) {
    double occ = occupancy(c, r);
    if (occ > 0) total += occ * std::abs(d(c.x) - rho_center) * c.det;
  }
  return total * cell_volume_;
}

double BallQuadrature::cone_mass(const DensityModel& d, double r) const {
  check_radius(r, r_max_);
  double total = 0;
  for (const auto& c : cells_) {
    if (!(c.dist < r)) continue;
    total += (1.0 - c.dist / r) * d(c.x) * c.det;
  }
  return total * cell_volume_;
}

double BallQuadrature::pairing(
    const DensityModel& d, double r,
    const std::function<double(const std::vector<double>&)>& phi) const {
  check_radius(r, r_max_);
  const int n = static_cast<int>(center_.size());
  std::vector<double> zh(n);
  double total = 0;
  for (const auto& c : cells_) {
    for (int i = 0; i < n; ++i) zh[i] = c.z[i] / std::pow(r, weights_.w[i]);
    double p = phi(zh);
    if (p != 0) total += p * d(c.x) * c.det;
  }
  return total * cell_volume_;
}

namespace {
double pseudo_norm(const std::vector<double>& z, const WeightVector& w) {
  double m = 0;
  for (size_t i = 0; i < z.size(); ++i)
    m = std::max(m, std::pow(std::abs(z[i]), 1.0 / w.w[i]));
  return m;
}
}  // namespace

std::vector<double> BallQuadrature::member_pseudo_norms(double r) const {
  check_radius(r, r_max_);
  std::vector<double> out;
  for (const auto& c : cells_)
    if (c.dist <= r) out.push_back(pseudo_norm(c.z, weights_));
  return out;
}

double BallQuadrature::inner_box_scale(double r) const {
  check_radius(r, r_max_);
  double cap = c_outer_ * r_max_ / r;
  double bad = kFar;
  for (const auto& c : cells_)
    if (!(c.dist <= r)) bad = std::min(bad, pseudo_norm(c.z, weights_));
  if (!std::isfinite(bad)) return cap;
  return std::min(bad / r, cap);
}

int BallQuadrature::box_violation_count(double r, double c_box) const {
  check_radius(r, r_max_);
  int count = 0;
  for (const auto& c : cells_) {
    double pn = pseudo_norm(c.z, weights_);
    bool member = c.dist <= r;
    if (member && pn > c_box * r * (1.0 + 1e-12)) ++count;
    if (!member && pn <= (r / c_box) * (1.0 - 1e-12)) ++count;
  }
  return count;
}

double ball_measure(const SubFinslerStructure& s, const DensityModel& d,
                    const std::vector<double>& q, double r, QuadratureOptions opts) {
  d.validate_on(s.chart_box());
  PrivilegedChart chart = build_privileged(s, q);
  BallQuadrature quad(s, chart, r, opts);
  return quad.mass(d, r);
}

std::vector<BallMeasureCurve> ball_measure_curves(const SubFinslerStructure& s,
                                                  const std::vector<DensityModel>& ds,
                                                  const std::vector<double>& q,
                                                  std::vector<double> radii,
                                                  QuadratureOptions opts) {
  if (radii.empty()) throw InvalidCurve("no radii given");
  if (ds.empty()) throw InvalidMeasure("no densities given");
  for (double r : radii)
    if (!(r > 0) || !std::isfinite(r)) throw InvalidCurve("radii must be positive");
  std::sort(radii.begin(), radii.end());
  for (const auto& d : ds) d.validate_on(s.chart_box());
  PrivilegedChart chart = build_privileged(s, q);

  std::vector<BallMeasureCurve> curves(ds.size());
  for (auto& c : curves) {
    c.radii = radii;
    c.masses.assign(radii.size(), 0.0);
  }
  for (size_t i = 0; i < radii.size(); ++i) {
    BallQuadrature quad(s, chart, radii[i], opts);
    for (size_t k = 0; k < ds.size(); ++k) {
      curves[k].masses[i] = quad.mass(ds[k], radii[i]);
      curves[k].sample_count += quad.solver_calls();
      curves[k].method = quad.method();
    }
  }
  return curves;
}

BallMeasureCurve ball_measure_curve(const SubFinslerStructure& s, const DensityModel& d,
                                    const std::vector<double>& q,
                                    std::vector<double> radii, QuadratureOptions opts) {
  return ball_measure_curves(s, {d}, q, std::move(radii), opts)[0];
}

AhlforsFit ahlfors_fit(const BallMeasureCurve& curve) {
  const auto& r = curve.radii;
  const auto& m = curve.masses;
  const size_t cnt = r.size();
  if (cnt < 4) throw InvalidCurve("regularity fit needs at least four radii");
  for (size_t i = 0; i + 1 < cnt; ++i)
    if (!(r[i + 1] > r[i])) throw InvalidCurve("radii must be strictly increasing");
  if (r.back() < 2.0 * r.front())
    throw InvalidCurve("radius range must span at least a factor two");
  for (double v : m)
    if (!(v > 0) || !std::isfinite(v)) throw InvalidCurve("ball masses must be positive");
  for (size_t i = 0; i + 1 < cnt; ++i)
    if (m[i + 1] < m[i] * (1.0 - 1e-9))
      throw InvalidCurve("ball masses decrease with the radius");

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < cnt; ++i) {
    double lx = std::log(r[i]), ly = std::log(m[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  double nn = static_cast<double>(cnt);
  double slope = (sxy - sx * sy / nn) / (sxx - sx * sx / nn);
  double inter = (sy - slope * sx) / nn;

  AhlforsFit fit;
  fit.q_est = slope;
  for (size_t i = 0; i < cnt; ++i) {
    double lx = std::log(r[i]), ly = std::log(m[i]);
    fit.residual = std::max(fit.residual, std::abs(ly - slope * lx - inter));
    fit.c_est = std::max(fit.c_est, std::abs(ly - slope * lx));
  }
  fit.c_est = std::exp(fit.c_est);
  return fit;
}

LebesgueReport lebesgue_point_check(const SubFinslerStructure& s, const DensityModel& d,
                                    const std::vector<double>& q, std::vector<double> radii,
                                    QuadratureOptions opts, double threshold_factor) {
  if (radii.size() < 2) throw InvalidCurve("need at least two radii");
  for (double r : radii)
    if (!(r > 0) || !std::isfinite(r)) throw InvalidCurve("radii must be positive");
  std::sort(radii.begin(), radii.end(), std::greater<double>());
  d.validate_on(s.chart_box());

  PrivilegedChart chart = build_privileged(s, q);
  const double qdim = static_cast<double>(chart.weights.homogeneous_dimension());
  const double rho_q = d(q);

  LebesgueReport rep;
  rep.radii = radii;
  rep.deficits.assign(radii.size(), 0.0);
  DensityModel flat = DensityModel::uniform();
  double kappa_emp = 0;
  for (size_t i = 0; i < radii.size(); ++i) {
    BallQuadrature quad(s, chart, radii[i], opts);
    rep.deficits[i] = quad.deviation_mass(d, radii[i], rho_q) / std::pow(radii[i], qdim);
    if (i + 1 == radii.size())
      kappa_emp = quad.mass(flat, radii[i]) / std::pow(radii[i], qdim);
  }

  rep.threshold = threshold_factor * rho_q * kappa_emp;
  bool monotone = true;
  for (size_t i = 0; i + 1 < rep.deficits.size(); ++i)
    if (rep.deficits[i + 1] > rep.deficits[i] * 1.05 + 1e-12) monotone = false;
  rep.is_lebesgue_numeric = monotone && rep.deficits.back() <= rep.threshold;
  return rep;
}

double tangent_normalization(const NilpotentStructure& nil, QuadratureOptions opts) {
  BallQuadrature quad(nil.structure, nil.weights, 1.0, opts);
  double cone = quad.cone_mass(DensityModel::uniform(), 1.0);
  if (!(cone > 0)) throw Error("degenerate unit-ball cone mass");
  return 1.0 / cone;
}

BallBoxReport ball_box_check(const SubFinslerStructure& s, const PrivilegedChart& chart,
                             std::vector<double> radii, QuadratureOptions opts) {
  if (radii.empty()) throw InvalidCurve("no radii given");
  for (double r : radii)
    if (!(r > 0) || !std::isfinite(r)) throw InvalidCurve("radii must be positive");
  std::sort(radii.begin(), radii.end());
  BallQuadrature quad(s, chart, radii.back(), opts);

  BallBoxReport rep;
  rep.radii = radii;
  double inner = kFar;
  for (double r : radii) {
    auto pns = quad.member_pseudo_norms(r);
    if (pns.empty()) throw InvalidCurve("no ball members at radius " + std::to_string(r));
    rep.c_outer_needed =
        std::max(rep.c_outer_needed, *std::max_element(pns.begin(), pns.end()) / r);
    inner = std::min(inner, quad.inner_box_scale(r));
  }
  rep.c_inner_needed = inner;
  rep.c_box = 1.05 * std::max(rep.c_outer_needed, 1.0 / inner);
  for (double r : radii) rep.violations += quad.box_violation_count(r, rep.c_box);
  return rep;
}

std::vector<double> blowup_pushforward(
    const SubFinslerStructure& s, const DensityModel& d, const std::vector<double>& q,
    double r, const std::vector<std::function<double(const std::vector<double>&)>>& testfns,
    QuadratureOptions opts) {
  d.validate_on(s.chart_box());
  PrivilegedChart chart = build_privileged(s, q);
  BallQuadrature quad(s, chart, r, opts);
  double cone = quad.cone_mass(d, r);
  if (!(cone > 0)) throw Error("degenerate blow-up normalization");
  std::vector<double> out;
  out.reserve(testfns.size());
  for (const auto& phi : testfns) out.push_back(quad.pairing(d, r, phi) / cone);
  return out;
}

}  // namespace sflab
