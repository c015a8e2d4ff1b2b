#include "sflab/geodesic.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <random>

#include "sflab/errors.hpp"

namespace sflab {

namespace {

const bool kGeoDebug = std::getenv("SFLAB_GEO_DEBUG") != nullptr;

uint64_t fnv1a(const void* data, size_t len, uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

uint64_t pair_seed(const std::vector<double>& a, const std::vector<double>& b,
                   uint64_t seed) {
  uint64_t h = 1469598103934665603ull ^ seed;
  h = fnv1a(a.data(), a.size() * sizeof(double), h);
  h = fnv1a(b.data(), b.size() * sizeof(double), h);
  return h;
}

bool constant_frame(const SubFinslerStructure& s) {
  for (const auto& f : s.fields())
    for (int j = 0; j < s.dimension(); ++j)
      if (f.component(j).total_degree() > 0) return false;
  return true;
}

// Discretized control problem on [0, 1]: piecewise-constant controls, RK4
// substeps, segment cost = (smoothed) gauge at the mid-substep boundary state.
// Gradients come from a reverse sweep over the stored stage points.
class Transcription {
 public:
  Transcription(const SubFinslerStructure& s, std::vector<double> start,
                std::vector<double> target, int segments, int substeps)
      : frame_(s.compiled()),
        norm_(s.norm()),
        n_(s.dimension()),
        k_(s.fiber_dimension()),
        segs_(segments),
        subs_(substeps),
        mid_(substeps / 2),
        dt_(1.0 / segments),
        h_(1.0 / (static_cast<double>(segments) * substeps)),
        start_(std::move(start)),
        target_(std::move(target)),
        point_norm_(s.norm().point_dependent()) {
    stages_.resize(static_cast<size_t>(segs_) * subs_ * 4 * n_);
    bounds_.resize((static_cast<size_t>(segs_) * subs_ + 1) * n_);
    qgrad_.assign(static_cast<size_t>(segs_) * n_, 0.0);
    cost_ugrad_.assign(static_cast<size_t>(segs_) * k_, 0.0);
    k1_.resize(n_);
    k2_.resize(n_);
    k3_.resize(n_);
    k4_.resize(n_);
    gk_.resize(n_);
    ab_.resize(n_);
    xadd_.resize(n_);
    gu_.resize(k_);
    lam_.resize(n_);
  }

  int vars() const { return segs_ * k_; }
  int segments() const { return segs_; }
  int state_dim() const { return n_; }
  double target(int j) const { return target_[j]; }
  // 0 turns the objective into the pure endpoint penalty (feasibility phase).
  void set_cost_weight(double w) { cost_w_ = w; }

  // Forward pass; fills the tape and returns the smoothed path cost.
  double forward(const double* u, double smooth_mu) {
    std::copy(start_.begin(), start_.end(), bounds_.data());
    double cost = 0;
    for (int seg = 0; seg < segs_; ++seg) {
      const double* useg = u + static_cast<size_t>(seg) * k_;
      for (int sub = 0; sub < subs_; ++sub) {
        double* st = stage(seg, sub);
        double* x = bounds_.data() + (static_cast<size_t>(seg) * subs_ + sub) * n_;
        double* xn = x + n_;
        double* a1 = st;
        double* a2 = st + n_;
        double* a3 = st + 2 * n_;
        double* a4 = st + 3 * n_;
        std::copy(x, x + n_, a1);
        frame_.apply(a1, useg, k1_.data());
        for (int j = 0; j < n_; ++j) a2[j] = x[j] + 0.5 * h_ * k1_[j];
        frame_.apply(a2, useg, k2_.data());
        for (int j = 0; j < n_; ++j) a3[j] = x[j] + 0.5 * h_ * k2_[j];
        frame_.apply(a3, useg, k3_.data());
        for (int j = 0; j < n_; ++j) a4[j] = x[j] + h_ * k3_[j];
        frame_.apply(a4, useg, k4_.data());
        for (int j = 0; j < n_; ++j)
          xn[j] = x[j] + h_ / 6.0 * (k1_[j] + 2.0 * (k2_[j] + k3_[j]) + k4_[j]);
      }
      const double* xm =
          bounds_.data() + (static_cast<size_t>(seg) * subs_ + mid_) * n_;
      double* gq = point_norm_ ? qgrad_.data() + static_cast<size_t>(seg) * n_ : nullptr;
      cost += dt_ * norm_.smoothed(xm, useg, smooth_mu,
                                   cost_ugrad_.data() + static_cast<size_t>(seg) * k_, gq);
    }
    return cost;
  }

  const double* endpoint() const {
    return bounds_.data() + static_cast<size_t>(segs_) * subs_ * n_;
  }

  double endpoint_gap() const {
    const double* xe = endpoint();
    double s = 0;
    for (int j = 0; j < n_; ++j) s += (xe[j] - target_[j]) * (xe[j] - target_[j]);
    return std::sqrt(s);
  }

  // Augmented Lagrangian value and gradient at the given controls.
  double eval(const double* u, double* grad, const Eigen::VectorXd& lambda, double mu,
              double smooth_mu) {
    double cost = cost_w_ * forward(u, smooth_mu);
    const double* xe = endpoint();
    double pen = 0;
    for (int j = 0; j < n_; ++j) {
      double c = xe[j] - target_[j];
      pen += lambda[j] * c + 0.5 * mu * c * c;
      lam_[j] = lambda[j] + mu * c;
    }
    backward(u, grad);
    return cost + pen;
  }

  // Exact-gauge cost over the tape left by the last forward pass.
  double exact_cost(const double* u) const {
    double cost = 0;
    for (int seg = 0; seg < segs_; ++seg) {
      const double* xm =
          bounds_.data() + (static_cast<size_t>(seg) * subs_ + mid_) * n_;
      cost += dt_ * norm_.gauge(xm, u + static_cast<size_t>(seg) * k_);
    }
    return cost;
  }

  std::vector<std::vector<double>> boundary_states() const {
    std::vector<std::vector<double>> out;
    out.reserve(segs_ + 1);
    for (int seg = 0; seg <= segs_; ++seg) {
      const double* x = bounds_.data() + (static_cast<size_t>(seg) * subs_) * n_;
      out.emplace_back(x, x + n_);
    }
    return out;
  }

 private:
  double* stage(int seg, int sub) {
    return stages_.data() + (static_cast<size_t>(seg) * subs_ + sub) * 4 * n_;
  }

  // Consumes lam_ = d(objective)/d(endpoint); writes the control gradient.
  void backward(const double* u, double* grad) {
    for (int seg = segs_ - 1; seg >= 0; --seg) {
      const double* useg = u + static_cast<size_t>(seg) * k_;
      double* gseg = grad + static_cast<size_t>(seg) * k_;
      const double* cg = cost_ugrad_.data() + static_cast<size_t>(seg) * k_;
      for (int i = 0; i < k_; ++i) gseg[i] = cost_w_ * dt_ * cg[i];
      for (int sub = subs_ - 1; sub >= 0; --sub) {
        const double* st =
            stages_.data() + (static_cast<size_t>(seg) * subs_ + sub) * 4 * n_;
        const double* a1 = st;
        const double* a2 = st + n_;
        const double* a3 = st + 2 * n_;
        const double* a4 = st + 3 * n_;
        std::fill(xadd_.begin(), xadd_.end(), 0.0);
        for (int j = 0; j < n_; ++j) gk_[j] = h_ / 6.0 * lam_[j];
        accumulate(a4, useg, gseg);
        for (int j = 0; j < n_; ++j) gk_[j] = h_ / 3.0 * lam_[j] + h_ * ab_[j];
        accumulate(a3, useg, gseg);
        for (int j = 0; j < n_; ++j) gk_[j] = h_ / 3.0 * lam_[j] + 0.5 * h_ * ab_[j];
        accumulate(a2, useg, gseg);
        for (int j = 0; j < n_; ++j) gk_[j] = h_ / 6.0 * lam_[j] + 0.5 * h_ * ab_[j];
        accumulate(a1, useg, gseg);
        for (int j = 0; j < n_; ++j) lam_[j] += xadd_[j];
        if (sub == mid_ && point_norm_) {
          const double* gq = qgrad_.data() + static_cast<size_t>(seg) * n_;
          for (int j = 0; j < n_; ++j) lam_[j] += cost_w_ * dt_ * gq[j];
        }
      }
    }
  }

  // One stage of the reverse sweep: gk_ holds the stage adjoint.
  void accumulate(const double* a, const double* useg, double* gseg) {
    frame_.jacobian_t_vec(a, useg, gk_.data(), ab_.data());
    frame_.apply_t(a, gk_.data(), gu_.data());
    for (int i = 0; i < k_; ++i) gseg[i] += gu_[i];
    for (int j = 0; j < n_; ++j) xadd_[j] += ab_[j];
  }

  const CompiledFrame& frame_;
  const NormFamily& norm_;
  int n_, k_, segs_, subs_, mid_;
  double dt_, h_;
  std::vector<double> start_, target_;
  bool point_norm_;
  std::vector<double> stages_, bounds_, qgrad_, cost_ugrad_;
  std::vector<double> k1_, k2_, k3_, k4_, gk_, ab_, xadd_, gu_, lam_;
  double cost_w_ = 1.0;
};

// Limited-memory BFGS direction buffer.
class LbfgsBuffer {
 public:
  explicit LbfgsBuffer(int memory) : m_(memory) {}

  void reset() {
    s_.clear();
    y_.clear();
    rho_.clear();
    gamma_ = 1.0;
  }

  void push(const Eigen::VectorXd& s, const Eigen::VectorXd& y) {
    double sy = s.dot(y);
    if (!(sy > 1e-12 * s.norm() * y.norm())) return;
    if (static_cast<int>(s_.size()) == m_) {
      s_.erase(s_.begin());
      y_.erase(y_.begin());
      rho_.erase(rho_.begin());
    }
    s_.push_back(s);
    y_.push_back(y);
    rho_.push_back(1.0 / sy);
    gamma_ = sy / y.dot(y);
  }

  Eigen::VectorXd direction(const Eigen::VectorXd& g) const {
    Eigen::VectorXd q = g;
    int m = static_cast<int>(s_.size());
    std::vector<double> alpha(m);
    for (int i = m - 1; i >= 0; --i) {
      alpha[i] = rho_[i] * s_[i].dot(q);
      q -= alpha[i] * y_[i];
    }
    q *= gamma_;
    for (int i = 0; i < m; ++i) {
      double beta = rho_[i] * y_[i].dot(q);
      q += (alpha[i] - beta) * s_[i];
    }
    return -q;
  }

 private:
  int m_;
  std::vector<Eigen::VectorXd> s_, y_;
  std::vector<double> rho_;
  double gamma_ = 1.0;
};

void minimize_inner(Transcription& tr, Eigen::VectorXd& u, const Eigen::VectorXd& lambda,
                    double mu, double smooth_mu, int max_iters) {
  LbfgsBuffer buf(8);
  Eigen::VectorXd g(u.size()), gnew(u.size()), trial(u.size());
  double f = tr.eval(u.data(), g.data(), lambda, mu, smooth_mu);
  for (int it = 0; it < max_iters; ++it) {
    Eigen::VectorXd d = buf.direction(g);
    double slope = g.dot(d);
    if (!(slope < -1e-14 * g.norm() * d.norm())) {
      buf.reset();
      d = -g;
      slope = -g.squaredNorm();
      if (slope == 0) break;
    }
    double t = 1.0;
    double ftrial = f;
    bool ok = false;
    for (int ls = 0; ls < 30; ++ls) {
      trial = u + t * d;
      ftrial = tr.eval(trial.data(), gnew.data(), lambda, mu, smooth_mu);
      if (std::isfinite(ftrial) && ftrial <= f + 1e-4 * t * slope) {
        ok = true;
        break;
      }
      t *= 0.5;
    }
    if (!ok) break;
    buf.push(t * d, gnew - g);
    u.swap(trial);
    g.swap(gnew);
    double df = f - ftrial;
    f = ftrial;
    if (g.lpNorm<Eigen::Infinity>() < 1e-10 * (1.0 + std::abs(f))) break;
    if (df < 1e-14 * (1.0 + std::abs(f)) && it > 4) break;
  }
}

struct StartResult {
  Eigen::VectorXd controls;
  Eigen::VectorXd lambda;  // endpoint multipliers, reusable across refinements
  double mu = 0;
  double exact_value = 0;
  double gap = 0;
};

// Augmented-Lagrangian outer loop from one initial control guess. Multipliers
// and penalty weight warm-start from *warm when given (they are discretization
// independent, so refinement levels hand them up the ladder).
StartResult run_al(Transcription& tr, Eigen::VectorXd u, const SolveOptions& opts,
                   double scale, bool smooth_norm, const StartResult* warm = nullptr) {
  double sc = std::max(scale, 1e-2);
  Eigen::VectorXd lambda = warm && warm->lambda.size() == tr.state_dim()
                               ? warm->lambda
                               : Eigen::VectorXd::Zero(tr.state_dim()).eval();
  double mu = warm && warm->mu > 0 ? warm->mu : opts.mu0 / sc;
  double smooth_floor = (smooth_norm ? 1e-8 : 1e-6) * sc;
  double smooth_mu = (smooth_norm || warm) ? smooth_floor : 0.03 * sc;
  if (!warm) {
    // Feasibility phase: reach the target before cost pressure applies, so
    // the cost term cannot collapse fresh seeds into zero-control traps.
    tr.set_cost_weight(0.0);
    Eigen::VectorXd zl = Eigen::VectorXd::Zero(tr.state_dim());
    minimize_inner(tr, u, zl, 1.0, smooth_floor, opts.inner_iterations);
    tr.set_cost_weight(1.0);
    tr.forward(u.data(), 0.0);
    // Size the penalty so that dropping the endpoint to erase the whole path
    // cost is never a win; otherwise short paths with long seeds collapse
    // into the zero-control stationary point and multipliers cannot recover.
    double cost_p1 = tr.exact_cost(u.data());
    mu = std::max(mu, 6.0 * (cost_p1 + 1e-9) / std::max(scale * scale, 1e-12));
    if (kGeoDebug)
      std::fprintf(stderr, "[geo] phase1 gap=%.3e unorm=%.3e mu=%.1e\n",
                   tr.endpoint_gap(), u.norm(), mu);
  }
  double prev_gap = std::numeric_limits<double>::infinity();
  for (int round = 0; round < opts.al_rounds; ++round) {
    minimize_inner(tr, u, lambda, mu, smooth_mu, opts.inner_iterations);
    tr.forward(u.data(), smooth_mu);
    double gap = tr.endpoint_gap();
    const double* xe = tr.endpoint();
    for (int j = 0; j < tr.state_dim(); ++j) lambda[j] += mu * (xe[j] - tr.target(j));
    if (kGeoDebug)
      std::fprintf(stderr, "[geo] round=%d gap=%.3e mu=%.1e cost=%.6f unorm=%.3e\n",
                   round, gap, mu, tr.exact_cost(u.data()), u.norm());
    mu = std::min(mu * (gap > 0.3 * prev_gap ? 8.0 : 2.0), 1e10 / sc);
    prev_gap = gap;
    smooth_mu = std::max(smooth_floor, smooth_mu * 0.25);
    if (gap < 0.05 * opts.endpoint_tol && round >= 1) break;
  }
  StartResult res;
  tr.forward(u.data(), 0.0);
  res.gap = tr.endpoint_gap();
  res.exact_value = tr.exact_cost(u.data());
  res.controls = std::move(u);
  res.lambda = std::move(lambda);
  res.mu = mu;
  return res;
}

}  // namespace

void ControlPath::validate(int k) const {
  if (controls.empty()) throw InvalidCurve("control path has no segments");
  for (const auto& row : controls) {
    if (static_cast<int>(row.size()) != k)
      throw InvalidCurve("control row size does not match the fiber dimension");
    for (double v : row)
      if (!std::isfinite(v)) throw InvalidCurve("control entry is not finite");
  }
}

std::vector<std::vector<double>> integrate(const SubFinslerStructure& s,
                                           const std::vector<double>& q0,
                                           const ControlPath& path, int substeps) {
  path.validate(s.fiber_dimension());
  if (static_cast<int>(q0.size()) != s.dimension())
    throw InvalidCurve("start point dimension mismatch");
  if (substeps < 1) substeps = 1;
  Transcription tr(s, q0, q0, path.segments(), substeps);
  std::vector<double> flat;
  flat.reserve(static_cast<size_t>(path.segments()) * s.fiber_dimension());
  for (const auto& row : path.controls) flat.insert(flat.end(), row.begin(), row.end());
  tr.forward(flat.data(), 1.0);
  auto states = tr.boundary_states();
  double slack = 1e-9 * (1.0 + s.chart_box().diameter());
  for (const auto& x : states)
    if (!s.chart_box().contains(x, slack))
      throw OutOfChart("integrated path leaves the chart box");
  return states;
}

double path_length(const SubFinslerStructure& s, const std::vector<double>& q0,
                   const ControlPath& path, int substeps) {
  path.validate(s.fiber_dimension());
  if (static_cast<int>(q0.size()) != s.dimension())
    throw InvalidCurve("start point dimension mismatch");
  if (substeps < 1) substeps = 1;
  int nseg = path.segments();
  double h = 1.0 / (static_cast<double>(nseg) * substeps);
  std::vector<double> x = q0;
  const auto& frame = s.compiled();
  int n = s.dimension();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), a(n), xm(n), v(n);
  auto rk4 = [&](const double* u, double step, std::vector<double>& out) {
    frame.apply(x.data(), u, k1.data());
    for (int j = 0; j < n; ++j) a[j] = x[j] + 0.5 * step * k1[j];
    frame.apply(a.data(), u, k2.data());
    for (int j = 0; j < n; ++j) a[j] = x[j] + 0.5 * step * k2[j];
    frame.apply(a.data(), u, k3.data());
    for (int j = 0; j < n; ++j) a[j] = x[j] + step * k3[j];
    frame.apply(a.data(), u, k4.data());
    for (int j = 0; j < n; ++j)
      out[j] = x[j] + step / 6.0 * (k1[j] + 2.0 * (k2[j] + k3[j]) + k4[j]);
  };
  double total = 0;
  for (int seg = 0; seg < nseg; ++seg) {
    const double* u = path.controls[seg].data();
    for (int sub = 0; sub < substeps; ++sub) {
      rk4(u, 0.5 * h, xm);  // quadrature node at the substep midpoint
      frame.apply(xm.data(), u, v.data());
      std::vector<double> vel(v);
      total += h * induced_norm(s, xm, vel);
      rk4(u, h, xm);
      x = xm;
    }
  }
  return total;
}

SolveOptions SolveOptions::fast() {
  SolveOptions o;
  o.coarse_segments = 8;
  o.max_segments = 16;
  o.multistarts = 2;
  o.al_rounds = 5;
  o.inner_iterations = 36;
  o.endpoint_tol = 1e-5;
  o.keep_trajectory = false;
  return o;
}

SolveOptions SolveOptions::standard() { return SolveOptions{}; }

SolveOptions SolveOptions::high() {
  SolveOptions o;
  o.coarse_segments = 16;
  o.max_segments = 96;
  o.multistarts = 6;
  o.al_rounds = 10;
  o.inner_iterations = 90;
  return o;
}

DistanceCertificate distance(const SubFinslerStructure& s, const std::vector<double>& a,
                             const std::vector<double>& b, const SolveOptions& opts) {
  int n = s.dimension();
  int k = s.fiber_dimension();
  if (static_cast<int>(a.size()) != n || static_cast<int>(b.size()) != n)
    throw Error("distance endpoints have the wrong dimension");
  double slack = 1e-9 * (1.0 + s.chart_box().diameter());
  if (!s.chart_box().contains(a, slack) || !s.chart_box().contains(b, slack))
    throw OutOfChart("distance endpoint outside the chart box");

  std::vector<double> disp(n);
  double dispn = 0;
  for (int j = 0; j < n; ++j) {
    disp[j] = b[j] - a[j];
    dispn += disp[j] * disp[j];
  }
  dispn = std::sqrt(dispn);

  DistanceCertificate cert;
  if (dispn == 0) {
    cert.value = 0;
    cert.feasible = true;
    cert.exact = true;
    cert.segments = 1;
    cert.controls.controls = {std::vector<double>(k, 0.0)};
    if (opts.keep_trajectory) cert.trajectory = {a, b};
    return cert;
  }

  // Constant frame and constant norm: the straight segment is optimal and the
  // minimal-control preimage is closed form.
  if (constant_frame(s) && !s.norm().point_dependent()) {
    std::vector<double> control;
    cert.value = induced_norm(s, a, disp, &control);
    cert.feasible = true;
    cert.exact = true;
    cert.segments = 1;
    cert.controls.controls = {control};
    if (opts.keep_trajectory) {
      std::vector<double> midp(n);
      for (int j = 0; j < n; ++j) midp[j] = 0.5 * (a[j] + b[j]);
      cert.trajectory = {a, midp, b};
    }
    return cert;
  }

  uint64_t seed = pair_seed(a, b, opts.seed);
  bool smooth_norm = s.norm().smooth();
  double scale = dispn;

  Eigen::MatrixXd A;
  s.frame_matrix(a, A);
  Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(disp.data(), n);
  Eigen::VectorXd base = A.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(d);
  double amp = std::max({base.lpNorm<Eigen::Infinity>(), std::sqrt(dispn), 0.1});

  int nseg = opts.coarse_segments;
  int starts = std::max(1, opts.multistarts);
  std::vector<StartResult> coarse;
  coarse.reserve(starts);
  {
    Transcription tr(s, a, b, nseg, opts.substeps);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int st = 0; st < starts; ++st) {
      Eigen::VectorXd u(static_cast<Eigen::Index>(nseg) * k);
      for (int seg = 0; seg < nseg; ++seg)
        for (int i = 0; i < k; ++i) u[static_cast<Eigen::Index>(seg) * k + i] = base[i];
      if (st == 1 && k >= 2) {
        // loop seed: injects bracket motion while keeping the endpoint close
        for (int seg = 0; seg < nseg; ++seg) {
          double th = 2.0 * M_PI * (seg + 0.5) / nseg;
          u[static_cast<Eigen::Index>(seg) * k + 0] += amp * std::cos(th);
          u[static_cast<Eigen::Index>(seg) * k + 1] += amp * std::sin(th);
        }
      } else if (st >= 1) {
        for (Eigen::Index i = 0; i < u.size(); ++i) u[i] += 0.7 * amp * gauss(rng);
      }
      coarse.push_back(run_al(tr, std::move(u), opts, scale, smooth_norm));
    }
  }

  auto score = [&](const StartResult& r) {
    return r.exact_value + 1e6 * std::max(0.0, r.gap - 10.0 * opts.endpoint_tol);
  };
  std::sort(coarse.begin(), coarse.end(),
            [&](const StartResult& x, const StartResult& y) { return score(x) < score(y); });
  int refine = std::min(starts > 2 ? 2 : 1, static_cast<int>(coarse.size()));

  StartResult best = coarse[0];
  int best_seg = nseg;
  for (int c = 0; c < refine; ++c) {
    StartResult cur = coarse[c];
    int seg = nseg;
    while (seg < opts.max_segments) {
      seg *= 2;
      Eigen::VectorXd up(static_cast<Eigen::Index>(seg) * k);
      for (int s2 = 0; s2 < seg; ++s2)
        for (int i = 0; i < k; ++i)
          up[static_cast<Eigen::Index>(s2) * k + i] =
              cur.controls[static_cast<Eigen::Index>(s2 / 2) * k + i];
      Transcription tr(s, a, b, seg, opts.substeps);
      cur = run_al(tr, std::move(up), opts, scale, smooth_norm, &cur);
      if (score(cur) <= score(best)) {
        best = cur;
        best_seg = seg;
      }
    }
  }

  Transcription tr(s, a, b, best_seg, opts.substeps);
  tr.forward(best.controls.data(), 0.0);
  cert.value = tr.exact_cost(best.controls.data());
  cert.endpoint_error = tr.endpoint_gap();
  cert.feasible = cert.endpoint_error <= opts.endpoint_tol;
  cert.segments = best_seg;
  cert.starts_used = starts;
  cert.controls.controls.resize(best_seg);
  for (int seg = 0; seg < best_seg; ++seg) {
    const double* row = best.controls.data() + static_cast<size_t>(seg) * k;
    cert.controls.controls[seg].assign(row, row + k);
  }
  if (opts.keep_trajectory) cert.trajectory = tr.boundary_states();
  if (!cert.feasible && !opts.allow_infeasible)
    throw NoConvergence("endpoint gap " + std::to_string(cert.endpoint_error) +
                        " above tolerance " + std::to_string(opts.endpoint_tol));
  return cert;
}

}  // namespace sflab
