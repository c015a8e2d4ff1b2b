#include "sflab/pmgh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>

#include "sflab/errors.hpp"
#include "sflab/parallel.hpp"

namespace sflab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<long long> quantize(const std::vector<double>& x) {
  std::vector<long long> key(x.size());
  for (size_t i = 0; i < x.size(); ++i) key[i] = llround(x[i] * 1e12);
  return key;
}

}  // namespace

void PointedSample::validate(double triangle_tol) const {
  const int n = size();
  if (n == 0) throw Error("sample has no points");
  if (metric.rows() != n || metric.cols() != n)
    throw Error("metric size does not match the point count");
  if (basepoint < 0 || basepoint >= n) throw Error("basepoint index out of range");
  if (static_cast<int>(weights.size()) != n) throw Error("weight count mismatch");
  double scale = 1e-12 * (1.0 + metric.cwiseAbs().maxCoeff());
  for (int i = 0; i < n; ++i) {
    if (std::abs(metric(i, i)) > scale) throw Error("metric diagonal entry not zero");
    if (!(weights[i] >= 0)) throw Error("negative sample weight");
    for (int j = 0; j < n; ++j) {
      double v = metric(i, j);
      if (!std::isfinite(v) || v < 0) throw Error("metric entry not a finite distance");
      if (std::abs(v - metric(j, i)) > scale) throw Error("metric not symmetric");
    }
  }
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (metric(i, j) > metric(i, k) + metric(k, j) + triangle_tol)
          throw Error("metric violates the triangle inequality");
}

PointedSample blowup_sample(const SubFinslerStructure& s, const DensityModel& den,
                            const std::vector<double>& q, double r, double R,
                            int grid_size, QuadratureOptions opts) {
  if (!(r > 0) || !std::isfinite(r) || !(R > 0) || !std::isfinite(R))
    throw Error("blow-up scale and radius must be positive");
  if (grid_size < 2) throw Error("grid size must be at least 2");
  const int n = s.dimension();
  if (n > 3) throw Error("the grid sampler supports dimension <= 3");
  den.validate_on(s.chart_box());
  PrivilegedChart chart = build_privileged(s, q);

  if (opts.per_axis <= 0) {
    // Ball-to-box volume fractions observed with probed per-axis constants.
    double frac = n == 1 ? 0.65 : (n == 2 ? 0.38 : 0.25);
    int g = static_cast<int>(std::ceil(std::pow(grid_size / frac, 1.0 / n)));
    opts.per_axis = std::max(5, g);
  }
  if (opts.per_axis % 2 == 0) ++opts.per_axis;  // odd grids carry a center node

  // Dilating B(q, rR) by delta_{1/r} gives the radius-R ball of the rescaled
  // structure, so all the work happens there: grid spacing, distances, and
  // solver conditioning stay O(1) however small r gets, and the r^Q volume
  // factors cancel out of every weight. When the rescaled structures agree
  // across scales the samples tie bitwise instead of rattling at the solver
  // noise floor.
  Box zbox = safe_z_box(s, chart);
  SubFinslerStructure sr = eps_structure(s, chart, Rational(r), zbox);
  BallQuadrature quad(sr, chart.weights, std::max(R, 1.0), opts);

  // The sampled measure pulled back to blow-up coordinates: density at the
  // undilated point times the chart jacobian there. The declared bounds are
  // never enforced on this model, so a padded scan over the chart suffices.
  CompiledPoly jac = CompiledPoly::from(chart.backward_jacobian);
  DilationFamily dil(chart.weights);
  double jac_lo = kInf, jac_hi = 0;
  {
    const int probes = 5;
    long total = 1;
    for (int a = 0; a < n; ++a) total *= probes;
    std::vector<double> z(n);
    for (long m = 0; m < total; ++m) {
      long t = m;
      for (int a = 0; a < n; ++a) {
        z[a] = zbox.lo[a] +
               (zbox.hi[a] - zbox.lo[a]) * (t % probes) / (probes - 1.0);
        t /= probes;
      }
      double v = std::abs(jac.eval(z.data()));
      jac_lo = std::min(jac_lo, v);
      jac_hi = std::max(jac_hi, v);
    }
  }
  DensityModel den_p = DensityModel::from_function(
      [&den, &chart, &dil, &jac, r](const std::vector<double>& p) {
        std::vector<double> z = dil.apply(p, r);
        return den(chart.from_privileged(z)) * std::abs(jac.eval(z.data()));
      },
      std::max(0.25 * den.lower * jac_lo, 1e-300),
      4.0 * den.upper * std::max(jac_hi, 1.0));

  std::vector<int> member;
  int base = -1;
  double base_norm = kInf;
  for (int i = 0; i < quad.cell_count(); ++i) {
    if (!(quad.cell_distance(i) <= R)) continue;
    double zn = 0;
    for (double c : quad.cell_z(i)) zn = std::max(zn, std::abs(c));
    if (zn < base_norm) {
      base_norm = zn;
      base = static_cast<int>(member.size());
    }
    member.push_back(i);
  }
  if (member.empty()) throw Error("no grid node falls inside the ball");

  double cone = quad.cone_mass(den_p, 1.0);
  if (!(cone > 0)) throw Error("degenerate blow-up normalization");

  const int count = static_cast<int>(member.size());

  PointedSample sample;
  sample.r = r;
  sample.cap_radius = R;
  sample.basepoint = base;
  sample.points.reserve(count);
  for (int m : member) {
    sample.points.push_back(quad.cell_z(m));
    sample.weights.push_back(quad.cell_mass(den_p, R, m) / cone);
    sample.node_volumes.push_back(quad.cell_volume());
  }
  // The center node is the basepoint; its blow-up coordinate is zero by
  // definition, so shed the floating-point dust of the grid construction.
  sample.points[base].assign(n, 0.0);

  SolveOptions bulk = opts.solve;
  bulk.allow_infeasible = true;
  bulk.keep_trajectory = false;
  SolveOptions careful = opts.retry;
  careful.allow_infeasible = true;
  careful.keep_trajectory = false;

  sample.metric = Eigen::MatrixXd::Zero(count, count);
  for (int j = 0; j < count; ++j) {
    double v = quad.cell_distance(member[j]);
    sample.metric(base, j) = sample.metric(j, base) = j == base ? 0.0 : v;
  }
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < count; ++i)
    for (int j = i + 1; j < count; ++j)
      if (i != base && j != base) pairs.emplace_back(i, j);
  parallel_for(0, static_cast<long>(pairs.size()), [&](long t) {
    auto [i, j] = pairs[t];
    const auto& a = quad.cell_x(member[i]);
    const auto& b = quad.cell_x(member[j]);
    auto cert = distance(sr, a, b, bulk);
    if (!cert.feasible) cert = distance(sr, a, b, careful);
    sample.metric(i, j) = sample.metric(j, i) = cert.value;
  });

  // Min-plus closure: solver values are upper bounds, so rerouting through
  // intermediate nodes only tightens them, and the triangle inequality
  // becomes exact.
  for (int k = 0; k < count; ++k)
    for (int i = 0; i < count; ++i) {
      double dik = sample.metric(i, k);
      for (int j = 0; j < count; ++j)
        if (dik + sample.metric(k, j) < sample.metric(i, j))
          sample.metric(i, j) = dik + sample.metric(k, j);
    }

  sample.validate();
  return sample;
}

double distortion(const PointedSample& sample, const MetricFn& tangent) {
  double worst = 0;
  for (int i = 0; i < sample.size(); ++i)
    for (int j = i + 1; j < sample.size(); ++j)
      worst = std::max(worst, std::abs(sample.metric(i, j) -
                                       tangent(sample.points[i], sample.points[j])));
  return worst;
}

double coverage_defect(const PointedSample& sample,
                       const std::vector<std::vector<double>>& tangent_points,
                       const MetricFn& tangent, double eps) {
  if (eps < 0) throw Error("coverage tolerance must be non-negative");
  double worst = 0;
  for (const auto& t : tangent_points) {
    double best = kInf;
    for (const auto& p : sample.points) best = std::min(best, tangent(t, p));
    worst = std::max(worst, best);
  }
  return std::max(0.0, worst - eps);
}

double measure_discrepancy(
    const PointedSample& sample, double m_q,
    const std::vector<std::function<double(const std::vector<double>&)>>& testfns) {
  double worst = 0;
  for (const auto& phi : testfns) {
    double emp = 0, ref = 0;
    for (int i = 0; i < sample.size(); ++i) {
      double v = phi(sample.points[i]);
      emp += sample.weights[i] * v;
      ref += sample.node_volumes[i] * v;
    }
    worst = std::max(worst, std::abs(emp - m_q * ref));
  }
  return worst;
}

double min_bijective_distortion(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
    throw Error("matrices must be square and of equal size");
  const int n = static_cast<int>(a.rows());
  if (n > 8) throw Error("exhaustive relabeling search is limited to 8 points");
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = kInf;
  do {
    double worst = 0;
    for (int i = 0; i < n && worst < best; ++i)
      for (int j = i + 1; j < n; ++j)
        worst = std::max(worst, std::abs(a(i, j) - b(perm[i], perm[j])));
    best = std::min(best, worst);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

MetricFn memoized_metric(const SubFinslerStructure& s, SolveOptions opts) {
  opts.allow_infeasible = true;
  opts.keep_trajectory = false;
  struct Cache {
    std::mutex mu;
    std::map<std::pair<std::vector<long long>, std::vector<long long>>, double> hits;
  };
  auto cache = std::make_shared<Cache>();
  auto structure = std::make_shared<SubFinslerStructure>(s);
  return [cache, structure, opts](const std::vector<double>& a,
                                  const std::vector<double>& b) {
    auto ka = quantize(a), kb = quantize(b);
    bool flip = kb < ka;
    auto key = flip ? std::make_pair(kb, ka) : std::make_pair(ka, kb);
    {
      std::lock_guard<std::mutex> lock(cache->mu);
      auto it = cache->hits.find(key);
      if (it != cache->hits.end()) return it->second;
    }
    double v = flip ? distance(*structure, b, a, opts).value
                    : distance(*structure, a, b, opts).value;
    std::lock_guard<std::mutex> lock(cache->mu);
    cache->hits.emplace(std::move(key), v);
    return v;
  };
}

}  // namespace sflab
