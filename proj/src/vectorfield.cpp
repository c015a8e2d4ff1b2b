#include "sflab/vectorfield.hpp"

#include <sstream>

namespace sflab {

PolyVectorField::PolyVectorField(PolyMap components) : comp_(std::move(components)) {
  n_ = static_cast<int>(comp_.size());
  for (auto& c : comp_) {
    if (c.nvars() == 0 && c.is_zero()) c = PolyScalar(n_);
    if (c.nvars() != n_) throw Error("vector field component arity mismatch");
  }
}

PolyVectorField PolyVectorField::coordinate(int nvars, int i) {
  PolyVectorField x(nvars);
  x.comp_[i] = PolyScalar::constant(nvars, Rational(1));
  return x;
}

bool PolyVectorField::is_zero() const {
  for (const auto& c : comp_)
    if (!c.is_zero()) return false;
  return true;
}

PolyVectorField PolyVectorField::operator+(const PolyVectorField& o) const {
  PolyVectorField out(n_);
  for (int j = 0; j < n_; ++j) out.comp_[j] = comp_[j] + o.comp_[j];
  return out;
}

PolyVectorField PolyVectorField::operator-(const PolyVectorField& o) const {
  PolyVectorField out(n_);
  for (int j = 0; j < n_; ++j) out.comp_[j] = comp_[j] - o.comp_[j];
  return out;
}

PolyVectorField PolyVectorField::scaled(const Rational& c) const {
  PolyVectorField out(n_);
  for (int j = 0; j < n_; ++j) out.comp_[j] = comp_[j].scaled(c);
  return out;
}

PolyScalar PolyVectorField::apply(const PolyScalar& f) const {
  if (f.nvars() != n_) throw Error("derivation arity mismatch");
  PolyScalar out(n_);
  for (int j = 0; j < n_; ++j) {
    if (comp_[j].is_zero()) continue;
    out += comp_[j] * f.derivative(j);
  }
  return out;
}

std::vector<double> PolyVectorField::eval(const std::vector<double>& x) const {
  return eval_map(comp_, x);
}

RatPoint PolyVectorField::eval(const RatPoint& x) const {
  return eval_map(comp_, x);
}

PolyVectorField PolyVectorField::truncated(int cap) const {
  PolyVectorField out(n_);
  for (int j = 0; j < n_; ++j) out.comp_[j] = comp_[j].truncated(cap);
  return out;
}

std::string PolyVectorField::str(const std::vector<std::string>& names) const {
  std::ostringstream os;
  bool first = true;
  for (int j = 0; j < n_; ++j) {
    if (comp_[j].is_zero()) continue;
    if (!first) os << " + ";
    first = false;
    os << "(" << comp_[j].str(names) << ")*d/d";
    if (static_cast<int>(names.size()) > j)
      os << names[j];
    else
      os << "z" << j;
  }
  return first ? "0" : os.str();
}

PolyVectorField lie_bracket(const PolyVectorField& x, const PolyVectorField& y) {
  if (x.nvars() != y.nvars()) throw Error("bracket arity mismatch");
  const int n = x.nvars();
  PolyVectorField out(n);
  for (int j = 0; j < n; ++j)
    out.component(j) = x.apply(y.component(j)) - y.apply(x.component(j));
  return out;
}

long weighted_order(const PolyVectorField& x, const WeightVector& w) {
  long best = kPosInfinity;
  for (int j = 0; j < x.nvars(); ++j) {
    const auto& c = x.component(j);
    if (c.is_zero()) continue;
    best = std::min(best, c.weighted_degree(w) - w.w[j]);
  }
  return best;
}

PolyVectorField weighted_field_part(const PolyVectorField& x, const WeightVector& w, long d) {
  PolyVectorField out(x.nvars());
  for (int j = 0; j < x.nvars(); ++j)
    out.component(j) = x.component(j).weighted_part(w, w.w[j] + d);
  return out;
}

PolyMap truncated_flow(const PolyVectorField& x, int cap) {
  const int n = x.nvars();
  const int m = n + 1;  // variables: start point 0..n-1, time n
  // Lift the field components to m variables.
  PolyMap lifted(n, PolyScalar(m));
  for (int j = 0; j < n; ++j) {
    for (const auto& [e, c] : x.component(j).terms()) {
      Exponents le(m, 0);
      for (int i = 0; i < n; ++i) le[i] = e[i];
      lifted[j].add_term(le, c);
    }
  }
  PolyMap phi(n, PolyScalar(m));
  for (int j = 0; j < n; ++j) phi[j] = PolyScalar::variable(m, j);

  for (int it = 0; it <= cap; ++it) {
    // next_j = z_j + int_0^t X^j(phi(s)) ds
    PolyMap next(n, PolyScalar(m));
    bool changed = false;
    for (int j = 0; j < n; ++j) {
      // Substitute phi into the lifted component: variables 0..n-1 -> phi,
      // variable n (time) -> itself.
      std::vector<PolyScalar> subst = phi;
      subst.push_back(PolyScalar::variable(m, n));
      PolyScalar rhs = lifted[j].composed(subst, cap);
      // Integrate in the time variable.
      PolyScalar integ(m);
      for (const auto& [e, c] : rhs.terms()) {
        Exponents ei = e;
        ei[n] += 1;
        long d = 0;
        for (unsigned k : ei) d += k;
        if (d > cap) continue;
        integ.add_term(ei, c / Rational(ei[n]));
      }
      next[j] = PolyScalar::variable(m, j) + integ;
      if (!(next[j] == phi[j])) changed = true;
    }
    phi = std::move(next);
    if (!changed) break;
  }
  return phi;
}

PolyMap flow_at_time(const PolyMap& flow, const Rational& t, int cap) {
  const int m = flow.empty() ? 0 : flow.front().nvars();
  const int n = m - 1;
  std::vector<PolyScalar> subst;
  subst.reserve(m);
  for (int i = 0; i < n; ++i) subst.push_back(PolyScalar::variable(n, i));
  subst.push_back(PolyScalar::constant(n, t));
  PolyMap out;
  out.reserve(flow.size());
  for (const auto& f : flow) out.push_back(f.composed(subst, cap));
  return out;
}

}  // namespace sflab
