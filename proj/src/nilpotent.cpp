#include "sflab/nilpotent.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "sflab/errors.hpp"

namespace sflab {

std::vector<double> DilationFamily::apply(const std::vector<double>& z, double eps) const {
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = std::pow(eps, weights.w[i]) * z[i];
  return out;
}

RatPoint DilationFamily::apply(const RatPoint& z, const Rational& eps) const {
  RatPoint out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = rat_pow(eps, weights.w[i]) * z[i];
  return out;
}

PolyMap DilationFamily::as_map(const Rational& eps) const {
  const int n = weights.dim();
  PolyMap m;
  m.reserve(n);
  for (int i = 0; i < n; ++i)
    m.push_back(PolyScalar::variable(n, i).scaled(rat_pow(eps, weights.w[i])));
  return m;
}

Box DilationFamily::apply(const Box& b, double eps) const {
  std::vector<double> lo(b.lo), hi(b.hi);
  for (std::size_t i = 0; i < lo.size(); ++i) {
    double f = std::pow(eps, weights.w[i]);
    lo[i] *= f;
    hi[i] *= f;
    if (lo[i] > hi[i]) std::swap(lo[i], hi[i]);
  }
  return Box(lo, hi);
}

PolyVectorField dilate_field(const PolyVectorField& y, const WeightVector& w,
                             const Rational& eps) {
  const int n = y.nvars();
  if (w.dim() != n) throw Error("weight arity mismatch");
  PolyVectorField out(n);
  for (int j = 0; j < n; ++j) {
    for (const auto& [e, c] : y.component(j).terms()) {
      long d = 1 - w.w[j];
      for (int i = 0; i < n; ++i) d += static_cast<long>(w.w[i]) * e[i];
      out.component(j).add_term(e, c * rat_pow(eps, d));
    }
  }
  return out;
}

PolyVectorField hat_part(const PolyVectorField& y, const WeightVector& w) {
  return weighted_field_part(y, w, -1);
}

bool is_degree_minus_one(const PolyVectorField& y, const WeightVector& w) {
  for (int j = 0; j < y.nvars(); ++j) {
    for (const auto& [e, c] : y.component(j).terms()) {
      long d = -w.w[j];
      for (int i = 0; i < y.nvars(); ++i) d += static_cast<long>(w.w[i]) * e[i];
      if (d != -1) return false;
    }
  }
  return true;
}

namespace {

using FieldVec = std::map<std::pair<int, Exponents>, Rational>;

FieldVec field_to_vec(const PolyVectorField& f) {
  FieldVec v;
  for (int j = 0; j < f.nvars(); ++j)
    for (const auto& [e, c] : f.component(j).terms()) v[{j, e}] = c;
  return v;
}

// v -= c * w
void axpy(FieldVec& v, const Rational& c, const FieldVec& w) {
  for (const auto& [k, val] : w) {
    auto it = v.find(k);
    if (it == v.end()) {
      Rational nv = -c * val;
      if (nv != 0) v.emplace(k, nv);
    } else {
      it->second -= c * val;
      if (it->second == 0) v.erase(it);
    }
  }
}

struct ExactSpan {
  // Reduced vectors with unit leading entries, plus their expression in the
  // original basis elements.
  std::vector<FieldVec> reduced;
  std::vector<std::vector<Rational>> expr;

  // Reduces v in place; coeffs (if given) receives the combination of
  // original basis vectors removed from v.
  void reduce(FieldVec& v, std::vector<Rational>* coeffs) const {
    if (coeffs) coeffs->assign(reduced.size(), Rational(0));
    for (std::size_t i = 0; i < reduced.size(); ++i) {
      const auto& lead = reduced[i].begin()->first;
      auto it = v.find(lead);
      if (it == v.end()) continue;
      Rational c = it->second / reduced[i].begin()->second;
      axpy(v, c, reduced[i]);
      if (coeffs)
        for (std::size_t m = 0; m < expr[i].size(); ++m)
          (*coeffs)[m] += c * expr[i][m];
    }
  }

  // Returns true when v was independent and absorbed as a new basis vector.
  bool absorb(const FieldVec& v_orig, std::size_t orig_index) {
    FieldVec v = v_orig;
    std::vector<Rational> coeffs;
    reduce(v, &coeffs);
    if (v.empty()) return false;
    // Track expression: new reduced vector = original - sum coeffs * basis.
    std::vector<Rational> e(orig_index + 1, Rational(0));
    for (std::size_t m = 0; m < coeffs.size(); ++m) e[m] = -coeffs[m];
    e[orig_index] = 1;
    for (auto& row : expr) row.resize(orig_index + 1, Rational(0));
    reduced.push_back(std::move(v));
    expr.push_back(std::move(e));
    return true;
  }
};

}  // namespace

NilpotentStructure nilpotent_approximation(const SubFinslerStructure& s,
                                           const PrivilegedChart& chart,
                                           double box_half_width) {
  const int n = s.dimension();
  std::vector<PolyVectorField> hats;
  hats.reserve(chart.pushed.size());
  for (std::size_t i = 0; i < chart.pushed.size(); ++i) {
    long ord = weighted_order(chart.pushed[i], chart.weights);
    if (ord < -1)
      throw NotApproximable("chart frame field " + std::to_string(i) +
                            " has weighted order " + std::to_string(ord));
    hats.push_back(hat_part(chart.pushed[i], chart.weights));
    if (!is_degree_minus_one(hats.back(), chart.weights))
      throw Error("hat field not homogeneous of degree -1");
  }

  NilpotentStructure out(SubFinslerStructure(
      hats, s.norm().frozen_at(chart.center_exact), Box::cube(n, box_half_width),
      s.name().empty() ? "tangent" : s.name() + "_tangent"));
  out.weights = chart.weights;
  out.step = chart.flag.step;
  out.dilations = DilationFamily(out.weights);

  // The limit flag must reproduce the original growth.
  FlagReport hat_flag = flag_at(out.structure, std::vector<double>(n, 0.0),
                                out.step + 1);
  if (hat_flag.growth != chart.flag.growth)
    throw StepMismatch("limit growth differs from the flag at the center");

  // Nilpotency of the generated algebra at the expected step.
  const auto& levels = out.structure.bracket_levels(out.step + 1);
  if (!out.structure.series_terminated(out.step + 1) ||
      static_cast<int>(levels.size()) != out.step)
    throw StepMismatch("limit algebra is not nilpotent of step " +
                       std::to_string(out.step));

  // Exact basis of the generated algebra.
  ExactSpan span;
  for (const auto& level : levels) {
    for (const auto& e : level) {
      FieldVec v = field_to_vec(e.field);
      if (v.empty()) continue;
      if (span.absorb(v, out.algebra_basis.size())) {
        out.algebra_basis.push_back(e.field);
        out.basis_words.push_back(e.word);
      }
    }
  }
  out.algebra_dimension = static_cast<int>(out.algebra_basis.size());

  // Structure constants, verified exactly.
  const int dim = out.algebra_dimension;
  out.bracket_table.assign(dim, std::vector<std::vector<Rational>>(
                                    dim, std::vector<Rational>(dim, Rational(0))));
  for (int a = 0; a < dim; ++a) {
    for (int b = 0; b < dim; ++b) {
      if (a == b) continue;
      PolyVectorField br = lie_bracket(out.algebra_basis[a], out.algebra_basis[b]);
      FieldVec v = field_to_vec(br);
      std::vector<Rational> coeffs;
      span.reduce(v, &coeffs);
      if (!v.empty())
        throw Error("bracket of basis elements escapes the generated algebra");
      for (int m = 0; m < dim; ++m) out.bracket_table[a][b][m] = coeffs[m];
    }
  }

  // Center: solutions of sum_m x_m [B_m, B_a] = 0 for all a.
  {
    std::vector<std::vector<Rational>> rows;
    for (int a = 0; a < dim; ++a)
      for (int l = 0; l < dim; ++l) {
        std::vector<Rational> row(dim, Rational(0));
        bool nz = false;
        for (int m = 0; m < dim; ++m) {
          row[m] = out.bracket_table[m][a][l];
          if (row[m] != 0) nz = true;
        }
        if (nz) rows.push_back(std::move(row));
      }
    // Rank by elimination.
    int rank = 0;
    for (int col = 0; col < dim && rank < static_cast<int>(rows.size()); ++col) {
      int piv = -1;
      for (int r = rank; r < static_cast<int>(rows.size()); ++r)
        if (rows[r][col] != 0) {
          piv = r;
          break;
        }
      if (piv < 0) continue;
      std::swap(rows[rank], rows[piv]);
      for (int r = 0; r < static_cast<int>(rows.size()); ++r) {
        if (r == rank || rows[r][col] == 0) continue;
        Rational f = rows[r][col] / rows[rank][col];
        for (int c = col; c < dim; ++c) rows[r][c] -= f * rows[rank][c];
      }
      ++rank;
    }
    out.center_dimension = dim - rank;
  }
  return out;
}

Box safe_z_box(const SubFinslerStructure& s, const PrivilegedChart& chart) {
  const int n = s.dimension();
  const auto& box = s.chart_box();
  auto fits = [&](double t) {
    // Corners and face midpoints of the anisotropic box.
    std::vector<double> ext(n);
    for (int i = 0; i < n; ++i) ext[i] = std::pow(t, chart.weights.w[i]);
    const long corners = 1L << n;
    for (long mask = 0; mask < corners; ++mask) {
      std::vector<double> z(n);
      for (int i = 0; i < n; ++i) z[i] = (mask & (1L << i)) ? ext[i] : -ext[i];
      if (!box.contains(chart.from_privileged(z), 1e-12)) return false;
    }
    for (int i = 0; i < n; ++i) {
      for (double sgn : {-1.0, 1.0}) {
        std::vector<double> z(n, 0.0);
        z[i] = sgn * ext[i];
        if (!box.contains(chart.from_privileged(z), 1e-12)) return false;
      }
    }
    return true;
  };
  double hi = 1.0;
  if (fits(hi)) {
    while (hi < 1e6 && fits(hi * 2)) hi *= 2;
  } else {
    while (hi > 1e-9 && !fits(hi)) hi /= 2;
    if (!fits(hi)) throw OutOfChart("no dilation-shaped box fits the chart");
  }
  // hi passes, 2 hi fails; refine between them.
  double a = hi, b = hi * 2;
  for (int it = 0; it < 30; ++it) {
    double mid = 0.5 * (a + b);
    if (fits(mid))
      a = mid;
    else
      b = mid;
  }
  double best = a;
  std::vector<double> zlo(n), zhi(n);
  for (int i = 0; i < n; ++i) {
    zhi[i] = std::pow(best, chart.weights.w[i]);
    zlo[i] = -zhi[i];
  }
  return Box(zlo, zhi);
}

SubFinslerStructure eps_structure(const SubFinslerStructure& s,
                                  const PrivilegedChart& chart, const Rational& eps,
                                  const Box& z_box) {
  if (eps <= 0) throw Error("eps must be positive");
  const int n = s.dimension();
  DilationFamily dil(chart.weights);
  std::vector<PolyVectorField> fields;
  fields.reserve(chart.pushed.size());
  for (const auto& y : chart.pushed) fields.push_back(dilate_field(y, chart.weights, eps));

  NormFamily norm = s.norm();
  if (norm.point_dependent()) {
    // Base point x = center + backward(delta_eps z).
    PolyMap dilated = compose_map(chart.backward, dil.as_map(eps));
    for (int i = 0; i < n; ++i)
      dilated[i] += PolyScalar::constant(n, chart.center_exact[i]);
    norm = norm.precomposed(dilated);
  }

  double inv_eps = 1.0 / eps.get_d();
  Box dil_box = dil.apply(z_box, inv_eps);
  return SubFinslerStructure(fields, std::move(norm), dil_box,
                             s.name() + "_eps_" + rat_str(eps));
}

}  // namespace sflab
