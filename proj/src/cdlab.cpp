#include "sflab/cdlab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sflab/errors.hpp"
#include "sflab/parallel.hpp"

namespace sflab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> scaled_control(const std::vector<double>& u, double c) {
  std::vector<double> out(u.size());
  for (size_t i = 0; i < u.size(); ++i) out[i] = c * u[i];
  return out;
}

// Constant-speed point at parameter t along a certificate path. Piecewise
// lengths come from re-integrating each segment's control scaled to its
// duration; the fractional segment is flowed with the control scaled down
// further, which is exact for the autonomous segment dynamics.
std::vector<double> point_along(const SubFinslerStructure& s,
                                const DistanceCertificate& cert,
                                const std::vector<double>& a, double t) {
  const int k = cert.controls.segments();
  if (cert.value <= 1e-14 || k == 0 || cert.trajectory.size() < 2) return a;
  if (static_cast<int>(cert.trajectory.size()) < k + 1)
    throw Error("certificate path lacks its trajectory");

  std::vector<double> lens(k);
  double total = 0;
  for (int seg = 0; seg < k; ++seg) {
    ControlPath one;
    one.controls = {scaled_control(cert.controls.controls[seg], 1.0 / k)};
    lens[seg] = path_length(s, cert.trajectory[seg], one, 6);
    total += lens[seg];
  }
  if (!(total > 0)) return a;

  double target = std::clamp(t, 0.0, 1.0) * total;
  int seg = 0;
  double cum = 0;
  while (seg < k - 1 && cum + lens[seg] < target) cum += lens[seg++];
  double f = lens[seg] > 0 ? std::clamp((target - cum) / lens[seg], 0.0, 1.0) : 0.0;

  ControlPath frac;
  frac.controls = {scaled_control(cert.controls.controls[seg], f / k)};
  return integrate(s, cert.trajectory[seg], frac, 8).back();
}

bool same_point(const std::vector<double>& a, const std::vector<double>& b) {
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

// Transport state shared between the interpolant and the entropy check.
struct PairState {
  TransportPlan plan;
  std::vector<double> dist;  // solver distance per plan entry
  std::vector<double> rho0, rho1;
};

DiscreteMeasure interpolate_core(const SubFinslerStructure& s, const DiscreteMeasure& mu0,
                                 const DiscreteMeasure& mu1, double t,
                                 const SolveOptions& opts, PairState* state) {
  mu0.validate();
  mu1.validate();
  if (mu0.dimension() != s.dimension() || mu1.dimension() != s.dimension())
    throw InvalidMeasure("measure support dimension does not match the structure");
  if (!(t >= 0.0) || !(t <= 1.0))
    throw Error("interpolation parameter must lie in [0, 1]");
  if (t == 0.0) return mu0;
  if (t == 1.0) return mu1;

  const int m = mu0.size(), n = mu1.size();
  if (m > 200 || n > 200) throw Error("transport supports are limited to 200 points");

  SolveOptions matrix_opts = opts;
  matrix_opts.keep_trajectory = false;
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m, n);
  parallel_for(0, static_cast<long>(m) * n, [&](long idx) {
    int i = static_cast<int>(idx / n), j = static_cast<int>(idx % n);
    if (same_point(mu0.support[i], mu1.support[j])) return;
    d(i, j) = distance(s, mu0.support[i], mu1.support[j], matrix_opts).value;
  });

  TransportPlan plan = optimal_transport(d.cwiseProduct(d), mu0.masses, mu1.masses);

  SolveOptions path_opts = opts;
  path_opts.keep_trajectory = true;
  const int count = plan.entries();

  DiscreteMeasure mid;
  mid.support.resize(count);
  mid.masses.resize(count);
  mid.cell_volumes.resize(count);
  mid.cell_extents.resize(count);
  if (state) {
    state->dist.resize(count);
    state->rho0.resize(count);
    state->rho1.resize(count);
  }
  parallel_for(0, count, [&](long e) {
    int i = plan.from[e], j = plan.to[e];
    const auto& a = mu0.support[i];
    const auto& b = mu1.support[j];
    if (d(i, j) <= 1e-14) {
      mid.support[e] = a;
    } else {
      auto cert = distance(s, a, b, path_opts);
      mid.support[e] = point_along(s, cert, a, t);
    }
    auto e0 = mu0.extent(i), e1 = mu1.extent(j);
    std::vector<double> blend(e0.size());
    double vol = 1;
    for (size_t ax = 0; ax < e0.size(); ++ax) {
      blend[ax] = (1.0 - t) * e0[ax] + t * e1[ax];
      vol *= blend[ax];
    }
    mid.masses[e] = plan.mass[e];
    mid.cell_volumes[e] = vol;
    mid.cell_extents[e] = std::move(blend);
    if (state) {
      state->dist[e] = d(i, j);
      state->rho0[e] = mu0.masses[i] / mu0.cell_volumes[i];
      state->rho1[e] = mu1.masses[j] / mu1.cell_volumes[j];
    }
  });
  if (state) state->plan = std::move(plan);
  return mid;
}

// Mass deposits of several measures onto one shared grid, each point spread
// over its cell footprint so bin alignment does not enter the entropies.
struct SharedGrid {
  int dim = 0, bins = 0;
  std::vector<double> lo, h;
  double cell_volume = 1;
  std::vector<std::vector<double>> deposits;
};

SharedGrid deposit_shared(const std::vector<const DiscreteMeasure*>& ms, int bins) {
  SharedGrid g;
  g.dim = ms[0]->dimension();
  g.bins = bins;
  g.lo.assign(g.dim, kInf);
  std::vector<double> hi(g.dim, -kInf);
  for (const auto* mu : ms)
    for (int i = 0; i < mu->size(); ++i) {
      auto e = mu->extent(i);
      for (int a = 0; a < g.dim; ++a) {
        g.lo[a] = std::min(g.lo[a], mu->support[i][a] - 0.5 * e[a]);
        hi[a] = std::max(hi[a], mu->support[i][a] + 0.5 * e[a]);
      }
    }
  g.h.resize(g.dim);
  for (int a = 0; a < g.dim; ++a) {
    double span = std::max(hi[a] - g.lo[a], 1e-9);
    double pad = 1e-9 * (1.0 + span);
    g.lo[a] -= pad;
    g.h[a] = (span + 2 * pad) / bins;
    g.cell_volume *= g.h[a];
  }

  long cellcount = 1;
  for (int a = 0; a < g.dim; ++a) cellcount *= bins;
  for (const auto* mu : ms) {
    std::vector<double> val(cellcount, 0.0);
    std::vector<std::vector<std::pair<int, double>>> axis(g.dim);
    for (int i = 0; i < mu->size(); ++i) {
      auto e = mu->extent(i);
      for (int a = 0; a < g.dim; ++a) {
        axis[a].clear();
        double p = mu->support[i][a];
        if (e[a] <= 0) {
          int c = std::clamp(static_cast<int>(std::floor((p - g.lo[a]) / g.h[a])), 0,
                             bins - 1);
          axis[a].push_back({c, 1.0});
          continue;
        }
        double a0 = p - 0.5 * e[a], a1 = p + 0.5 * e[a];
        int c0 = std::clamp(static_cast<int>(std::floor((a0 - g.lo[a]) / g.h[a])), 0,
                            bins - 1);
        int c1 = std::clamp(static_cast<int>(std::floor((a1 - g.lo[a]) / g.h[a])), 0,
                            bins - 1);
        for (int c = c0; c <= c1; ++c) {
          double left = std::max(a0, g.lo[a] + c * g.h[a]);
          double right = std::min(a1, g.lo[a] + (c + 1) * g.h[a]);
          if (right > left) axis[a].push_back({c, (right - left) / e[a]});
        }
        if (axis[a].empty()) axis[a].push_back({c0, 1.0});
      }
      double mass = mu->masses[i];
      if (g.dim == 1) {
        for (auto [c, w] : axis[0]) val[c] += mass * w;
      } else if (g.dim == 2) {
        for (auto [c0, w0] : axis[0])
          for (auto [c1, w1] : axis[1]) val[c0 * bins + c1] += mass * w0 * w1;
      } else {
        for (auto [c0, w0] : axis[0])
          for (auto [c1, w1] : axis[1])
            for (auto [c2, w2] : axis[2])
              val[(static_cast<long>(c0) * bins + c1) * bins + c2] += mass * w0 * w1 * w2;
      }
    }
    g.deposits.push_back(std::move(val));
  }
  return g;
}

double grid_entropy(const SharedGrid& g, int which, double N) {
  double theta = 1.0 - 1.0 / N, S = 0;
  for (double v : g.deposits[which])
    if (v > 0) S -= std::pow(v / g.cell_volume, theta) * g.cell_volume;
  return S;
}

// Midpoint distortion coefficient tau_{K,N}^{(1/2)}(theta) of the
// (K,N)-convexity inequality; 1/2 in the flat case.
double tau_half(double K, double N, double theta) {
  if (K == 0.0 || theta <= 0) return 0.5;
  double x = theta * std::sqrt(std::abs(K) / (N - 1.0));
  double sigma;
  if (K > 0) {
    if (x >= M_PI)
      throw Error("positive-curvature distortion coefficient diverges at this distance");
    sigma = 0.5 / std::cos(0.5 * x);
  } else {
    sigma = 0.5 / std::cosh(0.5 * x);
  }
  return std::pow(0.5, 1.0 / N) * std::pow(sigma, 1.0 - 1.0 / N);
}

int auto_bins(int dim) { return dim <= 1 ? 48 : (dim == 2 ? 16 : 8); }

// Deficit pieces that depend on N (and K) only, reused across the N grid.
struct PairReports {
  PairState state;
  SharedGrid fine, coarse;
  double transport_cost = 0;
};

PairReports pair_reports(const SubFinslerStructure& s, const DiscreteMeasure& mu0,
                         const DiscreteMeasure& mu1, const CdOptions& opts) {
  PairReports out;
  DiscreteMeasure half = interpolate_core(s, mu0, mu1, 0.5, opts.solve, &out.state);
  int bins = opts.bins > 0 ? opts.bins : auto_bins(mu0.dimension());
  int coarse = std::max(4, (2 * bins) / 3);
  out.fine = deposit_shared({&mu0, &half, &mu1}, bins);
  out.coarse = deposit_shared({&mu0, &half, &mu1}, coarse);
  out.transport_cost = out.state.plan.cost;
  return out;
}

EntropyReport report_from(const PairReports& pr, double N, double K) {
  EntropyReport rep;
  rep.N = N;
  rep.K = K;
  double S0 = grid_entropy(pr.fine, 0, N);
  double Sh = grid_entropy(pr.fine, 1, N);
  double S1 = grid_entropy(pr.fine, 2, N);
  rep.S_values = {S0, Sh, S1};
  double base = Sh - 0.5 * (S0 + S1);
  double base_coarse = grid_entropy(pr.coarse, 1, N) -
                       0.5 * (grid_entropy(pr.coarse, 0, N) + grid_entropy(pr.coarse, 2, N));
  double delta = 0;
  if (K != 0.0) {
    const auto& st = pr.state;
    for (int e = 0; e < st.plan.entries(); ++e)
      delta += st.plan.mass[e] * (tau_half(K, N, st.dist[e]) - 0.5) *
               (std::pow(st.rho0[e], -1.0 / N) + std::pow(st.rho1[e], -1.0 / N));
  }
  rep.deficit = base + delta;
  rep.eps_disc = 2.0 * std::abs(base - base_coarse) + 1e-9;
  rep.transport_cost = pr.transport_cost;
  return rep;
}

}  // namespace

void DiscreteMeasure::validate() const {
  const int n = size();
  if (n == 0) throw InvalidMeasure("measure has no support");
  const int dim = dimension();
  if (dim == 0) throw InvalidMeasure("support points have no coordinates");
  if (static_cast<int>(masses.size()) != n || static_cast<int>(cell_volumes.size()) != n)
    throw InvalidMeasure("masses and cell volumes must match the support");
  if (!cell_extents.empty() && static_cast<int>(cell_extents.size()) != n)
    throw InvalidMeasure("cell extents must match the support");
  double total = 0;
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(support[i].size()) != dim)
      throw InvalidMeasure("support points have mixed dimensions");
    if (!(masses[i] >= 0) || !std::isfinite(masses[i]))
      throw InvalidMeasure("masses must be non-negative");
    if (!(cell_volumes[i] > 0) || !std::isfinite(cell_volumes[i]))
      throw InvalidMeasure("cell volumes must be positive");
    if (!cell_extents.empty()) {
      if (static_cast<int>(cell_extents[i].size()) != dim)
        throw InvalidMeasure("cell extents must match the dimension");
      for (double e : cell_extents[i])
        if (!(e > 0) || !std::isfinite(e))
          throw InvalidMeasure("cell extents must be positive");
    }
    total += masses[i];
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw InvalidMeasure("masses must sum to one");
}

std::vector<double> DiscreteMeasure::extent(int i) const {
  if (!cell_extents.empty()) return cell_extents[i];
  const int dim = dimension();
  double side = std::pow(cell_volumes[i], 1.0 / dim);
  return std::vector<double>(dim, side);
}

DiscreteMeasure DiscreteMeasure::uniform_box(const Box& region, int per_axis) {
  if (per_axis < 1) throw InvalidMeasure("per-axis cell count must be positive");
  const int n = static_cast<int>(region.lo.size());
  DiscreteMeasure mu;
  std::vector<double> h(n);
  double vol = 1;
  long count = 1;
  for (int a = 0; a < n; ++a) {
    h[a] = (region.hi[a] - region.lo[a]) / per_axis;
    if (!(h[a] > 0)) throw InvalidMeasure("region must have positive extent");
    vol *= h[a];
    count *= per_axis;
  }
  for (long c = 0; c < count; ++c) {
    std::vector<double> p(n);
    long rest = c;
    for (int a = n - 1; a >= 0; --a) {
      p[a] = region.lo[a] + (rest % per_axis + 0.5) * h[a];
      rest /= per_axis;
    }
    mu.support.push_back(std::move(p));
    mu.masses.push_back(1.0 / static_cast<double>(count));
    mu.cell_volumes.push_back(vol);
    mu.cell_extents.push_back(h);
  }
  return mu;
}

double renyi_entropy(const DiscreteMeasure& mu, double N) {
  mu.validate();
  if (!(N > 1.0)) throw Error("the dimension parameter must exceed 1");
  const double theta = 1.0 - 1.0 / N;
  double S = 0;
  for (int i = 0; i < mu.size(); ++i)
    if (mu.masses[i] > 0)
      S -= std::pow(mu.masses[i] / mu.cell_volumes[i], theta) * mu.cell_volumes[i];
  return S;
}

TransportPlan optimal_transport(const Eigen::MatrixXd& cost,
                                const std::vector<double>& supply,
                                const std::vector<double>& demand) {
  const int m = static_cast<int>(supply.size());
  const int n = static_cast<int>(demand.size());
  if (m == 0 || n == 0) throw Error("transport needs non-empty marginals");
  if (m > 200 || n > 200) throw Error("transport supports are limited to 200 points");
  if (cost.rows() != m || cost.cols() != n)
    throw Error("cost matrix does not match the marginals");
  double sa = 0, sb = 0;
  for (double v : supply) {
    if (!(v >= 0) || !std::isfinite(v)) throw Error("supplies must be non-negative");
    sa += v;
  }
  for (double v : demand) {
    if (!(v >= 0) || !std::isfinite(v)) throw Error("demands must be non-negative");
    sb += v;
  }
  if (std::abs(sa - sb) > 1e-9) throw Error("transport marginals are not balanced");
  if (cost.minCoeff() < 0) throw Error("transport costs must be non-negative");

  const double kDone = 1e-13, kFlow = 1e-12;
  std::vector<double> rem_a = supply, rem_b = demand;
  Eigen::MatrixXd flow = Eigen::MatrixXd::Zero(m, n);
  std::vector<double> pot(m + n, 0.0);
  int guard = m * n + 2 * (m + n) + 16;

  while (true) {
    std::vector<double> dist(m + n, kInf);
    std::vector<int> prev(m + n, -1);
    std::vector<char> done(m + n, 0);
    bool any = false;
    for (int i = 0; i < m; ++i)
      if (rem_a[i] > kDone) {
        dist[i] = 0;
        any = true;
      }
    if (!any) break;
    if (--guard < 0) throw Error("transport solver exceeded its iteration budget");

    for (int round = 0; round < m + n; ++round) {
      int x = -1;
      double best = kInf;
      for (int v = 0; v < m + n; ++v)
        if (!done[v] && dist[v] < best) {
          best = dist[v];
          x = v;
        }
      if (x < 0) break;
      done[x] = 1;
      if (x < m) {
        for (int j = 0; j < n; ++j) {
          double w = std::max(0.0, cost(x, j) + pot[x] - pot[m + j]);
          if (dist[x] + w < dist[m + j]) {
            dist[m + j] = dist[x] + w;
            prev[m + j] = x;
          }
        }
      } else {
        int j = x - m;
        for (int i = 0; i < m; ++i) {
          if (flow(i, j) <= kFlow) continue;
          double w = std::max(0.0, -cost(i, j) + pot[x] - pot[i]);
          if (dist[x] + w < dist[i]) {
            dist[i] = dist[x] + w;
            prev[i] = x;
          }
        }
      }
    }

    int sink = -1;
    double bestd = kInf;
    for (int j = 0; j < n; ++j)
      if (rem_b[j] > kDone && dist[m + j] < bestd) {
        bestd = dist[m + j];
        sink = j;
      }
    if (sink < 0) throw Error("transport network is infeasible");

    double amount = rem_b[sink];
    int root = m + sink;
    for (int x = m + sink; prev[x] >= 0; x = prev[x]) {
      int y = prev[x];
      if (x < m) amount = std::min(amount, flow(x, y - m));
      root = y;
    }
    amount = std::min(amount, rem_a[root]);
    if (amount > 0) {
      for (int x = m + sink; prev[x] >= 0; x = prev[x]) {
        int y = prev[x];
        if (x >= m)
          flow(y, x - m) += amount;
        else
          flow(x, y - m) -= amount;
      }
      rem_a[root] -= amount;
      rem_b[sink] -= amount;
    } else {
      rem_a[root] = 0;  // unshippable dust
    }
    for (int v = 0; v < m + n; ++v)
      if (dist[v] < kInf) pot[v] += std::min(dist[v], bestd);
  }

  TransportPlan plan;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      if (flow(i, j) > 1e-14) {
        plan.from.push_back(i);
        plan.to.push_back(j);
        plan.mass.push_back(flow(i, j));
        plan.cost += flow(i, j) * cost(i, j);
      }
  for (int i = 0; i < m; ++i) {
    double row = 0;
    for (int j = 0; j < n; ++j) row += flow(i, j);
    if (std::abs(row - supply[i]) > 1e-9)
      throw Error("transport plan does not match its marginals");
  }
  return plan;
}

DiscreteMeasure w2_interpolate(const SubFinslerStructure& s, const DiscreteMeasure& mu0,
                               const DiscreteMeasure& mu1, double t,
                               const SolveOptions& opts) {
  return interpolate_core(s, mu0, mu1, t, opts, nullptr);
}

EntropyReport cd_midpoint_check(const SubFinslerStructure& s, const DiscreteMeasure& mu0,
                                const DiscreteMeasure& mu1, double N, double K,
                                CdOptions opts) {
  if (!(N > 1.0)) throw Error("the dimension parameter must exceed 1");
  PairReports pr = pair_reports(s, mu0, mu1, opts);
  return report_from(pr, N, K);
}

std::vector<ViolationInstance> violation_search(
    const SubFinslerStructure& s,
    const std::vector<std::pair<DiscreteMeasure, DiscreteMeasure>>& family,
    const std::vector<double>& n_grid, int budget, CdOptions opts) {
  if (budget < 1) throw Error("search budget must be at least 1");
  for (double N : n_grid)
    if (!(N > 1.0)) throw Error("the dimension parameter must exceed 1");

  std::vector<ViolationInstance> found;
  int spent = 0;
  for (size_t p = 0; p < family.size() && spent < budget; ++p) {
    PairReports pr = pair_reports(s, family[p].first, family[p].second, opts);
    for (double N : n_grid) {
      if (spent >= budget) break;
      ++spent;
      EntropyReport rep = report_from(pr, N, 0.0);
      if (rep.deficit > rep.eps_disc)
        found.push_back({static_cast<int>(p), N, rep});
    }
  }
  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
    return a.report.deficit > b.report.deficit;
  });
  return found;
}

DiscreteMeasure ball_discrete_measure(const BallQuadrature& quad,
                                      const DensityModel& den, double r) {
  if (quad.cell_spacing().empty())
    throw Error("ball measure extraction needs the lattice quadrature");
  DiscreteMeasure mu;
  double total = 0;
  for (int i = 0; i < quad.cell_count(); ++i) {
    if (!(quad.cell_distance(i) <= r)) continue;
    double mass = quad.cell_mass(den, r, i);
    if (!(mass > 0)) continue;
    mu.support.push_back(quad.cell_x(i));
    mu.masses.push_back(mass);
    mu.cell_volumes.push_back(quad.cell_volume() * quad.cell_jacobian(i));
    mu.cell_extents.push_back(quad.cell_spacing());
    total += mass;
  }
  if (!(total > 0)) throw InvalidMeasure("ball carries no mass at this radius");
  for (double& v : mu.masses) v /= total;
  return mu;
}

}  // namespace sflab
