#include "sflab/norm.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "sflab/errors.hpp"

namespace sflab {

struct NormFamily::Compiled {
  // Quadratic: entries and their base-point partials.
  std::vector<CompiledPoly> g;                  // k*k row major
  std::vector<std::vector<CompiledPoly>> dg;    // [base_dim][k*k]
  // Polytope: squared row norms.
  std::vector<double> row_norm2;
};

void NormFamily::compile() {
  auto c = std::make_shared<Compiled>();
  if (kind_ == NormKind::Quadratic) {
    c->g.reserve(k_ * k_);
    for (int i = 0; i < k_; ++i)
      for (int j = 0; j < k_; ++j) c->g.push_back(CompiledPoly::from(quad_[i][j]));
    c->dg.resize(base_dim_);
    for (int m = 0; m < base_dim_; ++m) {
      c->dg[m].reserve(k_ * k_);
      for (int i = 0; i < k_; ++i)
        for (int j = 0; j < k_; ++j)
          c->dg[m].push_back(CompiledPoly::from(quad_[i][j].derivative(m)));
    }
  } else if (kind_ == NormKind::Polytope) {
    for (const auto& row : support_) {
      double s = 0;
      for (double v : row) s += v * v;
      c->row_norm2.push_back(s);
    }
  }
  compiled_ = std::move(c);
}

NormFamily NormFamily::lp(int k, double p) {
  if (k <= 0) throw Error("norm fiber dimension must be positive");
  if (!(p >= 1.0)) throw Error("lp exponent must be >= 1");
  NormFamily n;
  n.k_ = k;
  n.base_dim_ = 0;
  n.kind_ = NormKind::LP;
  n.p_ = p;
  n.compile();
  return n;
}

NormFamily NormFamily::quadratic(std::vector<std::vector<PolyScalar>> g) {
  NormFamily n;
  n.k_ = static_cast<int>(g.size());
  if (n.k_ <= 0) throw Error("empty quadratic norm matrix");
  for (const auto& row : g)
    if (static_cast<int>(row.size()) != n.k_) throw Error("quadratic norm matrix not square");
  n.base_dim_ = g[0][0].nvars();
  for (int i = 0; i < n.k_; ++i)
    for (int j = 0; j < n.k_; ++j) {
      if (g[i][j].nvars() != n.base_dim_) throw Error("quadratic entry arity mismatch");
      if (!(g[i][j] == g[j][i])) throw Error("quadratic norm matrix not symmetric");
    }
  n.kind_ = NormKind::Quadratic;
  n.quad_ = std::move(g);
  n.compile();
  return n;
}

NormFamily NormFamily::polytope(int k, std::vector<std::vector<double>> support,
                                double smoothing) {
  if (k <= 0) throw Error("norm fiber dimension must be positive");
  if (smoothing < 0) throw Error("polytope smoothing must be >= 0");
  if (support.empty()) throw Error("polytope needs support vectors");
  for (const auto& row : support)
    if (static_cast<int>(row.size()) != k) throw Error("support vector arity mismatch");
  NormFamily n;
  n.k_ = k;
  n.base_dim_ = 0;
  n.kind_ = NormKind::Polytope;
  n.support_ = std::move(support);
  n.smoothing_ = smoothing;
  n.compile();
  return n;
}

bool NormFamily::point_dependent() const {
  if (kind_ != NormKind::Quadratic) return false;
  for (const auto& row : quad_)
    for (const auto& e : row)
      if (!e.is_constant()) return true;
  return false;
}

bool NormFamily::smooth() const {
  switch (kind_) {
    case NormKind::LP:
      return std::isfinite(p_) && p_ > 1.0;
    case NormKind::Quadratic:
      return true;
    case NormKind::Polytope:
      return smoothing_ > 0.0;
  }
  return false;
}

namespace {

double lp_gauge(const double* u, int k, double p) {
  if (!std::isfinite(p)) {
    double m = 0;
    for (int i = 0; i < k; ++i) m = std::max(m, std::fabs(u[i]));
    return m;
  }
  double m = 0;
  for (int i = 0; i < k; ++i) m = std::max(m, std::fabs(u[i]));
  if (m == 0) return 0;
  double s = 0;
  for (int i = 0; i < k; ++i) s += std::pow(std::fabs(u[i]) / m, p);
  return m * std::pow(s, 1.0 / p);
}

// Squared distance from u to {x : <a_j, x> <= t} by Dykstra's projections.
double polytope_dist2(const std::vector<std::vector<double>>& rows,
                      const std::vector<double>& row_norm2, const double* u, int k,
                      double t, std::vector<double>* proj_out) {
  const int m = static_cast<int>(rows.size());
  std::vector<double> x(u, u + k);
  std::vector<double> corr(m * k, 0.0);
  for (int sweep = 0; sweep < 400; ++sweep) {
    double moved = 0;
    for (int j = 0; j < m; ++j) {
      // Add back this constraint's correction, then project.
      for (int i = 0; i < k; ++i) x[i] += corr[j * k + i];
      double dot = 0;
      for (int i = 0; i < k; ++i) dot += rows[j][i] * x[i];
      double viol = dot - t;
      if (viol > 0) {
        double f = viol / row_norm2[j];
        for (int i = 0; i < k; ++i) {
          double step = f * rows[j][i];
          corr[j * k + i] = step;
          x[i] -= step;
          moved += step * step;
        }
      } else {
        for (int i = 0; i < k; ++i) {
          moved += corr[j * k + i] * corr[j * k + i];
          corr[j * k + i] = 0;
        }
      }
    }
    if (moved < 1e-26) break;
  }
  double d2 = 0;
  for (int i = 0; i < k; ++i) d2 += (u[i] - x[i]) * (u[i] - x[i]);
  if (proj_out) *proj_out = x;
  return d2;
}

double polytope_plain(const std::vector<std::vector<double>>& rows, const double* u,
                      int k, int* argmax) {
  double best = -std::numeric_limits<double>::infinity();
  int bi = 0;
  for (std::size_t j = 0; j < rows.size(); ++j) {
    double dot = 0;
    for (int i = 0; i < k; ++i) dot += rows[j][i] * u[i];
    if (dot > best) {
      best = dot;
      bi = static_cast<int>(j);
    }
  }
  if (argmax) *argmax = bi;
  return best;
}

}  // namespace

double NormFamily::gauge(const double* q, const double* u) const {
  switch (kind_) {
    case NormKind::LP:
      return lp_gauge(u, k_, p_);
    case NormKind::Quadratic: {
      double raw = 0;
      for (int i = 0; i < k_; ++i)
        for (int j = 0; j < k_; ++j)
          raw += compiled_->g[i * k_ + j].eval(q) * u[i] * u[j];
      if (raw < 0) {
        if (raw < -1e-12) throw Error("quadratic norm not positive at base point");
        raw = 0;
      }
      return std::sqrt(raw);
    }
    case NormKind::Polytope: {
      double zero_norm = 0;
      for (int i = 0; i < k_; ++i) zero_norm += u[i] * u[i];
      if (zero_norm == 0) return 0;
      double plain = polytope_plain(support_, u, k_, nullptr);
      if (smoothing_ == 0) {
        if (plain <= 0) throw Error("polytope gauge nonpositive: support vectors do not span");
        return plain;
      }
      if (plain <= 0) throw Error("polytope gauge nonpositive: support vectors do not span");
      // Gauge of the rounded body K + s B: smallest t with dist(u, tK) = t s.
      double hi = plain;
      double lo = 0;
      // f(t) = dist(u, tK) - t s is strictly decreasing; f(hi) <= -s hi < 0.
      for (int it = 0; it < 80; ++it) {
        double mid = (lo + hi) / 2;
        if (mid == lo || mid == hi) break;
        double d = std::sqrt(
            polytope_dist2(support_, compiled_->row_norm2, u, k_, mid, nullptr));
        if (d > mid * smoothing_)
          lo = mid;
        else
          hi = mid;
      }
      return hi;
    }
  }
  return 0;
}

double NormFamily::gauge_subgrad(const double* q, const double* u, double* grad_u) const {
  std::fill(grad_u, grad_u + k_, 0.0);
  switch (kind_) {
    case NormKind::LP: {
      double val = lp_gauge(u, k_, p_);
      if (val == 0) return 0;
      if (!std::isfinite(p_)) {
        int bi = 0;
        double m = -1;
        for (int i = 0; i < k_; ++i)
          if (std::fabs(u[i]) > m) {
            m = std::fabs(u[i]);
            bi = i;
          }
        grad_u[bi] = u[bi] >= 0 ? 1.0 : -1.0;
        return val;
      }
      for (int i = 0; i < k_; ++i) {
        if (u[i] == 0) continue;
        double s = u[i] > 0 ? 1.0 : -1.0;
        grad_u[i] = s * std::pow(std::fabs(u[i]) / val, p_ - 1.0);
      }
      return val;
    }
    case NormKind::Quadratic: {
      double val = gauge(q, u);
      if (val == 0) return 0;
      for (int i = 0; i < k_; ++i) {
        double wi = 0;
        for (int j = 0; j < k_; ++j) wi += compiled_->g[i * k_ + j].eval(q) * u[j];
        grad_u[i] = wi / val;
      }
      return val;
    }
    case NormKind::Polytope: {
      double n2 = 0;
      for (int i = 0; i < k_; ++i) n2 += u[i] * u[i];
      if (n2 == 0) return 0;
      if (smoothing_ == 0) {
        int bi = 0;
        double val = polytope_plain(support_, u, k_, &bi);
        for (int i = 0; i < k_; ++i) grad_u[i] = support_[bi][i];
        return val;
      }
      double t = gauge(q, u);
      std::vector<double> proj;
      polytope_dist2(support_, compiled_->row_norm2, u, k_, t, &proj);
      double dn = 0;
      for (int i = 0; i < k_; ++i) dn += (u[i] - proj[i]) * (u[i] - proj[i]);
      dn = std::sqrt(dn);
      if (dn < 1e-300) return t;
      // Envelope differentiation of dist(u, tK) = t s.
      double denom = smoothing_;
      for (int i = 0; i < k_; ++i)
        denom += (u[i] - proj[i]) / dn * (proj[i] / t);
      for (int i = 0; i < k_; ++i) grad_u[i] = (u[i] - proj[i]) / dn / denom;
      return t;
    }
  }
  return 0;
}

double NormFamily::smoothed(const double* q, const double* u, double mu, double* grad_u,
                            double* grad_q) const {
  if (grad_q) std::fill(grad_q, grad_q + std::max(base_dim_, 1), 0.0);
  switch (kind_) {
    case NormKind::LP: {
      if (mu <= 0) return gauge_subgrad(q, u, grad_u);
      if (!std::isfinite(p_)) {
        // Soft max over the 2k functionals +-u_i.
        double m = 0;
        for (int i = 0; i < k_; ++i) m = std::max(m, std::fabs(u[i]));
        double z = 0;
        std::vector<double> wp(k_), wn(k_);
        for (int i = 0; i < k_; ++i) {
          wp[i] = std::exp((u[i] - m) / mu);
          wn[i] = std::exp((-u[i] - m) / mu);
          z += wp[i] + wn[i];
        }
        for (int i = 0; i < k_; ++i) grad_u[i] = (wp[i] - wn[i]) / z;
        return m + mu * std::log(z);
      }
      std::vector<double> s(k_);
      for (int i = 0; i < k_; ++i) s[i] = std::sqrt(u[i] * u[i] + mu * mu);
      if (p_ == 1.0) {
        double val = 0;
        for (int i = 0; i < k_; ++i) {
          val += s[i];
          grad_u[i] = u[i] / s[i];
        }
        return val;
      }
      double m = 0;
      for (int i = 0; i < k_; ++i) m = std::max(m, s[i]);
      double acc = 0;
      for (int i = 0; i < k_; ++i) acc += std::pow(s[i] / m, p_);
      double val = m * std::pow(acc, 1.0 / p_);
      for (int i = 0; i < k_; ++i)
        grad_u[i] = std::pow(s[i] / val, p_ - 1.0) * (u[i] / s[i]);
      return val;
    }
    case NormKind::Quadratic: {
      double raw = 0;
      std::vector<double> w(k_, 0.0);
      for (int i = 0; i < k_; ++i) {
        for (int j = 0; j < k_; ++j) w[i] += compiled_->g[i * k_ + j].eval(q) * u[j];
        raw += w[i] * u[i];
      }
      raw = std::max(raw, 0.0);
      double val = std::sqrt(raw + mu * mu);
      if (val == 0) {
        std::fill(grad_u, grad_u + k_, 0.0);
        return 0;
      }
      for (int i = 0; i < k_; ++i) grad_u[i] = w[i] / val;
      if (grad_q && point_dependent()) {
        for (int m2 = 0; m2 < base_dim_; ++m2) {
          double acc = 0;
          for (int i = 0; i < k_; ++i)
            for (int j = 0; j < k_; ++j)
              acc += compiled_->dg[m2][i * k_ + j].eval(q) * u[i] * u[j];
          grad_q[m2] = acc / (2 * val);
        }
      }
      return val;
    }
    case NormKind::Polytope: {
      if (smoothing_ > 0 || mu <= 0) return gauge_subgrad(q, u, grad_u);
      const int m = static_cast<int>(support_.size());
      std::vector<double> c(m);
      double mx = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < m; ++j) {
        c[j] = 0;
        for (int i = 0; i < k_; ++i) c[j] += support_[j][i] * u[i];
        mx = std::max(mx, c[j]);
      }
      double z = 0;
      for (int j = 0; j < m; ++j) {
        c[j] = std::exp((c[j] - mx) / mu);
        z += c[j];
      }
      std::fill(grad_u, grad_u + k_, 0.0);
      for (int j = 0; j < m; ++j) {
        double wj = c[j] / z;
        for (int i = 0; i < k_; ++i) grad_u[i] += wj * support_[j][i];
      }
      return mx + mu * std::log(z);
    }
  }
  return 0;
}

NormFamily NormFamily::frozen_at(const RatPoint& q) const {
  if (kind_ != NormKind::Quadratic) return *this;
  if (static_cast<int>(q.size()) != base_dim_) throw Error("freeze point arity mismatch");
  NormFamily out = *this;
  for (int i = 0; i < k_; ++i)
    for (int j = 0; j < k_; ++j)
      out.quad_[i][j] = PolyScalar::constant(base_dim_, quad_[i][j].eval(q));
  out.compile();
  return out;
}

NormFamily NormFamily::precomposed(const PolyMap& base_map) const {
  if (kind_ != NormKind::Quadratic) return *this;
  if (static_cast<int>(base_map.size()) != base_dim_)
    throw Error("precompose arity mismatch");
  NormFamily out = *this;
  out.base_dim_ = base_map.empty() ? 0 : base_map.front().nvars();
  for (int i = 0; i < k_; ++i)
    for (int j = 0; j < k_; ++j) out.quad_[i][j] = quad_[i][j].composed(base_map);
  out.compile();
  return out;
}

void NormFamily::validate(const std::vector<double>& q, int ndirections,
                          uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> u(k_), v(k_), mid(k_), u2(k_);
  const double* qp = q.data();
  for (int trial = 0; trial < ndirections; ++trial) {
    for (int i = 0; i < k_; ++i) {
      u[i] = gauss(rng);
      v[i] = gauss(rng);
    }
    double gu = gauge(qp, u.data());
    double gv = gauge(qp, v.data());
    if (!(gu > 0) || !(gv > 0)) throw Error("gauge not positive on a sample direction");
    for (int i = 0; i < k_; ++i) {
      mid[i] = 0.5 * (u[i] + v[i]);
      u2[i] = 2.0 * u[i];
    }
    if (std::fabs(gauge(qp, u2.data()) - 2 * gu) > 1e-9 * (1 + gu))
      throw Error("gauge not 1-homogeneous");
    if (gauge(qp, mid.data()) > 0.5 * (gu + gv) + 1e-9 * (1 + gu + gv))
      throw Error("gauge not convex");
  }
  if (kind_ == NormKind::Quadratic) {
    Eigen::MatrixXd g(k_, k_);
    for (int i = 0; i < k_; ++i)
      for (int j = 0; j < k_; ++j) g(i, j) = compiled_->g[i * k_ + j].eval(qp);
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() != Eigen::Success)
      throw Error("quadratic norm matrix not positive definite at base point");
  }
}

}  // namespace sflab
