#include "sflab/coords.hpp"

#include <algorithm>

#include "sflab/errors.hpp"

namespace sflab {

std::vector<double> PrivilegedChart::to_privileged(const std::vector<double>& x) const {
  std::vector<double> xc(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) xc[i] = x[i] - center[i];
  return eval_map(forward, xc);
}

std::vector<double> PrivilegedChart::from_privileged(const std::vector<double>& z) const {
  std::vector<double> x = eval_map(backward, z);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += center[i];
  return x;
}

namespace {

// Fields recentered so that q sits at the origin of the x variables.
std::vector<PolyVectorField> recenter_fields(const std::vector<PolyVectorField>& fields,
                                             const RatPoint& q) {
  const int n = fields.empty() ? 0 : fields.front().nvars();
  std::vector<PolyScalar> shift;
  shift.reserve(n);
  for (int i = 0; i < n; ++i)
    shift.push_back(PolyScalar::variable(n, i) + PolyScalar::constant(n, q[i]));
  std::vector<PolyVectorField> out;
  out.reserve(fields.size());
  for (const auto& f : fields) {
    PolyMap comp;
    comp.reserve(n);
    for (int j = 0; j < n; ++j) comp.push_back(f.component(j).composed(shift));
    out.emplace_back(std::move(comp));
  }
  return out;
}

std::optional<int> order_centered(const std::vector<PolyVectorField>& centered,
                                  const PolyScalar& f, int cap) {
  const int n = f.nvars();
  RatPoint origin(n, Rational(0));
  if (f.eval(origin) != 0) return 0;
  std::vector<PolyScalar> cur{f};
  for (int level = 1; level <= cap; ++level) {
    std::vector<PolyScalar> next;
    next.reserve(cur.size() * centered.size());
    bool hit = false;
    for (const auto& g : cur) {
      for (const auto& x : centered) {
        PolyScalar xg = x.apply(g);
        if (!hit && xg.eval(origin) != 0) hit = true;
        next.push_back(std::move(xg));
      }
    }
    if (hit) return level;
    cur = std::move(next);
  }
  return std::nullopt;
}

}  // namespace

std::optional<int> nonholonomic_order(const SubFinslerStructure& s, const RatPoint& q,
                                      const PolyScalar& f, int cap) {
  if (cap < 0) throw Error("order cap must be >= 0");
  if (f.nvars() != s.dimension()) throw Error("function arity mismatch");
  // Shift to centered coordinates; orders are shift-invariant and the scan
  // at the origin keeps intermediate polynomials small.
  const int n = s.dimension();
  std::vector<PolyScalar> shift;
  shift.reserve(n);
  for (int i = 0; i < n; ++i)
    shift.push_back(PolyScalar::variable(n, i) + PolyScalar::constant(n, q[i]));
  PolyScalar fc = f.composed(shift);
  return order_centered(recenter_fields(s.fields(), q), fc, cap);
}

void certify_privileged(const SubFinslerStructure& s, const RatPoint& center,
                        const WeightVector& weights, const PolyMap& forward_centered) {
  auto centered = recenter_fields(s.fields(), center);
  for (int j = 0; j < weights.dim(); ++j) {
    int w = weights.w[j];
    auto ord = order_centered(centered, forward_centered[j], w);
    if (!ord.has_value())
      throw NotPrivileged("coordinate " + std::to_string(j) + " has order > " +
                          std::to_string(w));
    if (*ord != w)
      throw NotPrivileged("coordinate " + std::to_string(j) + " has order " +
                          std::to_string(*ord) + ", expected " + std::to_string(w));
  }
}

PrivilegedChart build_privileged(const SubFinslerStructure& s,
                                 const std::vector<double>& q, int extra_cap,
                                 int depth_cap) {
  if (extra_cap < 1) throw Error("extra cap must be >= 1");
  PrivilegedChart chart;
  chart.center = q;
  chart.center_exact = rat_point(q);
  chart.flag = flag_at(s, q, depth_cap);
  chart.weights = chart.flag.weights;
  chart.cap = chart.flag.step + extra_cap;

  const int n = s.dimension();
  const int cap = chart.cap;

  // Adapted frame in centered coordinates.
  auto adapted_centered = recenter_fields(chart.flag.adapted_frame, chart.center_exact);

  // backward(z) = flow of Z_1 for time z_1 applied to ... flow of Z_n for
  // time z_n applied to the origin.
  PolyMap point(n, PolyScalar(n));  // the centered origin
  for (int j = n - 1; j >= 0; --j) {
    PolyMap flow = truncated_flow(adapted_centered[j], cap);
    // Substitute: flow variables 0..n-1 <- current point map, n <- z_j.
    std::vector<PolyScalar> subst = point;
    subst.push_back(PolyScalar::variable(n, j));
    PolyMap next;
    next.reserve(n);
    for (const auto& comp : flow) next.push_back(comp.composed(subst, cap));
    point = std::move(next);
  }
  chart.backward = std::move(point);
  chart.forward = inverse_map(chart.backward, cap);
  chart.backward_jacobian = jacobian_determinant(chart.backward);

  certify_privileged(s, chart.center_exact, chart.weights, chart.forward);

  // Push the generating frame through the chart: Y_i^j(z) = (X_i F_j)(B(z)).
  auto fields_centered = recenter_fields(s.fields(), chart.center_exact);
  chart.pushed.reserve(s.fiber_dimension());
  for (const auto& x : fields_centered) {
    PolyMap comps;
    comps.reserve(n);
    for (int j = 0; j < n; ++j) {
      PolyScalar xf = x.apply(chart.forward[j]);
      comps.push_back(xf.composed(chart.backward, cap));
    }
    chart.pushed.emplace_back(std::move(comps));
  }
  return chart;
}

}  // namespace sflab
