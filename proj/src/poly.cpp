#include "sflab/poly.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace sflab {

Rational rat_parse(const std::string& s) {
  if (s.empty()) throw Error("empty rational literal");
  Rational r;
  if (r.set_str(s, 10) != 0) throw Error("bad rational literal: " + s);
  r.canonicalize();
  return r;
}

std::string rat_str(const Rational& r) {
  return r.get_str();
}

Rational rat_pow(const Rational& r, long e) {
  if (e == 0) return Rational(1);
  bool neg = e < 0;
  unsigned long a = neg ? static_cast<unsigned long>(-e) : static_cast<unsigned long>(e);
  Rational base = r;
  if (neg) {
    if (r == 0) throw Error("zero to a negative power");
    base = Rational(1) / r;
  }
  Rational out(1);
  while (a) {
    if (a & 1) out *= base;
    base *= base;
    a >>= 1;
  }
  return out;
}

WeightVector::WeightVector(std::vector<int> ws) : w(std::move(ws)) {
  if (w.empty()) throw Error("empty weight vector");
  if (w.front() != 1) throw Error("weight vector must start at 1");
  for (std::size_t i = 1; i < w.size(); ++i)
    if (w[i] < w[i - 1]) throw Error("weight vector must be non-decreasing");
}

long WeightVector::homogeneous_dimension() const {
  long q = 0;
  for (int wi : w) q += wi;
  return q;
}

PolyScalar PolyScalar::constant(int nvars, const Rational& c) {
  PolyScalar p(nvars);
  p.add_term(Exponents(nvars, 0), c);
  return p;
}

PolyScalar PolyScalar::variable(int nvars, int i) {
  if (i < 0 || i >= nvars) throw Error("variable index out of range");
  PolyScalar p(nvars);
  Exponents e(nvars, 0);
  e[i] = 1;
  p.add_term(e, Rational(1));
  return p;
}

PolyScalar PolyScalar::monomial(int nvars, const Exponents& e, const Rational& c) {
  if (static_cast<int>(e.size()) != nvars) throw Error("exponent arity mismatch");
  PolyScalar p(nvars);
  p.add_term(e, c);
  return p;
}

bool PolyScalar::is_constant() const {
  if (terms_.empty()) return true;
  if (terms_.size() > 1) return false;
  const auto& e = terms_.begin()->first;
  return std::all_of(e.begin(), e.end(), [](unsigned k) { return k == 0; });
}

Rational PolyScalar::constant_term() const {
  auto it = terms_.find(Exponents(n_, 0));
  return it == terms_.end() ? Rational(0) : it->second;
}

void PolyScalar::add_term(const Exponents& e, const Rational& c) {
  if (static_cast<int>(e.size()) != n_) throw Error("exponent arity mismatch");
  // GMP comparisons are undefined on non-canonical values, so normalize
  // coefficients entering from outside.
  Rational cc = c;
  cc.canonicalize();
  if (cc == 0) return;
  auto [it, fresh] = terms_.emplace(e, cc);
  if (!fresh) {
    it->second += cc;
    if (it->second == 0) terms_.erase(it);
  }
}

PolyScalar PolyScalar::operator+(const PolyScalar& o) const {
  PolyScalar out = *this;
  out += o;
  return out;
}

PolyScalar& PolyScalar::operator+=(const PolyScalar& o) {
  if (n_ != o.n_ && !o.terms_.empty() && !terms_.empty())
    throw Error("polynomial arity mismatch");
  if (terms_.empty()) n_ = std::max(n_, o.n_);
  for (const auto& [e, c] : o.terms_) add_term(e, c);
  return *this;
}

PolyScalar PolyScalar::operator-(const PolyScalar& o) const {
  PolyScalar out = *this;
  out -= o;
  return out;
}

PolyScalar& PolyScalar::operator-=(const PolyScalar& o) {
  if (n_ != o.n_ && !o.terms_.empty() && !terms_.empty())
    throw Error("polynomial arity mismatch");
  if (terms_.empty()) n_ = std::max(n_, o.n_);
  for (const auto& [e, c] : o.terms_) add_term(e, -c);
  return *this;
}

PolyScalar PolyScalar::operator-() const {
  PolyScalar out(n_);
  for (const auto& [e, c] : terms_) out.terms_.emplace(e, -c);
  return out;
}

PolyScalar PolyScalar::scaled(const Rational& c) const {
  PolyScalar out(n_);
  if (c == 0) return out;
  for (const auto& [e, k] : terms_) out.terms_.emplace(e, k * c);
  return out;
}

PolyScalar PolyScalar::operator*(const PolyScalar& o) const {
  if (n_ != o.n_ && !terms_.empty() && !o.terms_.empty())
    throw Error("polynomial arity mismatch");
  PolyScalar out(std::max(n_, o.n_));
  Exponents e(out.n_, 0);
  for (const auto& [ea, ca] : terms_) {
    for (const auto& [eb, cb] : o.terms_) {
      for (std::size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
      out.add_term(e, ca * cb);
    }
  }
  return out;
}

bool PolyScalar::operator==(const PolyScalar& o) const {
  return terms_ == o.terms_;
}

PolyScalar PolyScalar::derivative(int i) const {
  if (i < 0 || i >= n_) throw Error("derivative index out of range");
  PolyScalar out(n_);
  for (const auto& [e, c] : terms_) {
    if (e[i] == 0) continue;
    Exponents d = e;
    d[i] -= 1;
    out.add_term(d, c * Rational(e[i]));
  }
  return out;
}

long PolyScalar::total_degree() const {
  if (terms_.empty()) return kNegInfinity;
  long best = 0;
  for (const auto& [e, c] : terms_) {
    long d = 0;
    for (unsigned k : e) d += k;
    best = std::max(best, d);
  }
  return best;
}

long PolyScalar::weighted_degree(const WeightVector& w) const {
  if (terms_.empty()) return kNegInfinity;
  if (w.dim() != n_) throw Error("weight arity mismatch");
  long best = std::numeric_limits<long>::max();
  for (const auto& [e, c] : terms_) {
    long d = 0;
    for (int i = 0; i < n_; ++i) d += static_cast<long>(w.w[i]) * e[i];
    best = std::min(best, d);
  }
  return best;
}

PolyScalar PolyScalar::weighted_part(const WeightVector& w, long d) const {
  if (w.dim() != n_) throw Error("weight arity mismatch");
  PolyScalar out(n_);
  for (const auto& [e, c] : terms_) {
    long deg = 0;
    for (int i = 0; i < n_; ++i) deg += static_cast<long>(w.w[i]) * e[i];
    if (deg == d) out.terms_.emplace(e, c);
  }
  return out;
}

PolyScalar PolyScalar::truncated(int cap) const {
  if (cap < 0) return *this;
  PolyScalar out(n_);
  for (const auto& [e, c] : terms_) {
    long d = 0;
    for (unsigned k : e) d += k;
    if (d <= cap) out.terms_.emplace(e, c);
  }
  return out;
}

Rational PolyScalar::eval(const RatPoint& x) const {
  if (static_cast<int>(x.size()) != n_) throw Error("eval arity mismatch");
  Rational out(0);
  for (const auto& [e, c] : terms_) {
    Rational m = c;
    for (int i = 0; i < n_; ++i)
      if (e[i]) m *= rat_pow(x[i], e[i]);
    out += m;
  }
  return out;
}

double PolyScalar::eval(const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != n_) throw Error("eval arity mismatch");
  double out = 0;
  for (const auto& [e, c] : terms_) {
    double m = c.get_d();
    for (int i = 0; i < n_; ++i)
      for (unsigned k = 0; k < e[i]; ++k) m *= x[i];
    out += m;
  }
  return out;
}

PolyScalar PolyScalar::composed(const std::vector<PolyScalar>& subst, int cap) const {
  if (static_cast<int>(subst.size()) != n_) throw Error("composition arity mismatch");
  int m = subst.empty() ? 0 : subst.front().nvars();
  for (const auto& s : subst)
    if (s.nvars() != m) throw Error("composition arity mismatch");
  PolyScalar out(m);
  for (const auto& [e, c] : terms_) {
    PolyScalar term = PolyScalar::constant(m, c);
    for (int i = 0; i < n_; ++i) {
      for (unsigned k = 0; k < e[i]; ++k) {
        term = (term * subst[i]).truncated(cap);
        if (term.is_zero()) break;
      }
      if (term.is_zero()) break;
    }
    out += term;
  }
  return out;
}

std::string PolyScalar::str(const std::vector<std::string>& names) const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [e, c] : terms_) {
    if (!first) os << " + ";
    first = false;
    os << rat_str(c);
    for (int i = 0; i < n_; ++i) {
      if (!e[i]) continue;
      os << "*";
      if (static_cast<int>(names.size()) > i)
        os << names[i];
      else
        os << "z" << i;
      if (e[i] > 1) os << "^" << e[i];
    }
  }
  return os.str();
}

PolyMap identity_map(int nvars) {
  PolyMap id;
  id.reserve(nvars);
  for (int i = 0; i < nvars; ++i) id.push_back(PolyScalar::variable(nvars, i));
  return id;
}

PolyMap compose_map(const PolyMap& f, const PolyMap& g, int cap) {
  PolyMap out;
  out.reserve(f.size());
  for (const auto& fi : f) out.push_back(fi.composed(g, cap));
  return out;
}

std::vector<double> eval_map(const PolyMap& f, const std::vector<double>& x) {
  std::vector<double> out;
  out.reserve(f.size());
  for (const auto& fi : f) out.push_back(fi.eval(x));
  return out;
}

RatPoint eval_map(const PolyMap& f, const RatPoint& x) {
  RatPoint out;
  out.reserve(f.size());
  for (const auto& fi : f) out.push_back(fi.eval(x));
  return out;
}

// Solves A x = b over the rationals by Gaussian elimination.
std::vector<Rational> solve_rational_system(std::vector<std::vector<Rational>> a,
                                            std::vector<Rational> b) {
  const int n = static_cast<int>(a.size());
  for (int col = 0; col < n; ++col) {
    int piv = -1;
    for (int r = col; r < n; ++r)
      if (a[r][col] != 0) {
        piv = r;
        break;
      }
    if (piv < 0) throw Error("singular linear part");
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    Rational inv = Rational(1) / a[col][col];
    for (int c = col; c < n; ++c) a[col][c] *= inv;
    b[col] *= inv;
    for (int r = 0; r < n; ++r) {
      if (r == col || a[r][col] == 0) continue;
      Rational f = a[r][col];
      for (int c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  return b;
}

PolyMap inverse_map(const PolyMap& f, int cap) {
  const int n = static_cast<int>(f.size());
  for (const auto& fi : f) {
    if (fi.nvars() != n) throw Error("inverse_map needs a square map");
    if (fi.constant_term() != 0) throw Error("inverse_map needs f(0) = 0");
  }
  // Linear part A, column j = coefficients of variable j.
  std::vector<std::vector<Rational>> a(n, std::vector<Rational>(n, Rational(0)));
  for (int i = 0; i < n; ++i) {
    for (const auto& [e, c] : f[i].terms()) {
      long d = 0;
      int var = -1;
      for (int j = 0; j < n; ++j) {
        d += e[j];
        if (e[j] == 1) var = j;
      }
      if (d == 1) a[i][var] = c;
    }
  }
  // Columns of A^{-1} via n solves.
  std::vector<std::vector<Rational>> ainv(n, std::vector<Rational>(n));
  for (int j = 0; j < n; ++j) {
    std::vector<Rational> e(n, Rational(0));
    e[j] = 1;
    auto col = solve_rational_system(a, e);
    for (int i = 0; i < n; ++i) ainv[i][j] = col[i];
  }

  // Higher-order part h(z) = f(z) - A z.
  PolyMap h(n, PolyScalar(n));
  for (int i = 0; i < n; ++i) {
    PolyScalar lin(n);
    for (int j = 0; j < n; ++j)
      if (a[i][j] != 0) lin += PolyScalar::variable(n, j).scaled(a[i][j]);
    h[i] = f[i] - lin;
  }

  auto apply_ainv = [&](const PolyMap& v) {
    PolyMap out(n, PolyScalar(n));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (ainv[i][j] != 0) out[i] += v[j].scaled(ainv[i][j]);
    return out;
  };

  // g_{m+1}(w) = A^{-1} (w - h(g_m(w))); degree-m part stabilizes at step m.
  PolyMap g = apply_ainv(identity_map(n));
  for (int it = 0; it < cap; ++it) {
    PolyMap hg = compose_map(h, g, cap);
    PolyMap rhs(n, PolyScalar(n));
    for (int i = 0; i < n; ++i) rhs[i] = PolyScalar::variable(n, i) - hg[i];
    PolyMap next = apply_ainv(rhs);
    if (next == g) break;
    g = std::move(next);
  }
  return g;
}

PolyScalar jacobian_determinant(const PolyMap& f) {
  const int n = static_cast<int>(f.size());
  std::vector<std::vector<PolyScalar>> j(n, std::vector<PolyScalar>(n, PolyScalar(n)));
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) j[r][c] = f[r].derivative(c);
  // Cofactor expansion, fine for n <= 5.
  std::vector<int> cols(n);
  for (int i = 0; i < n; ++i) cols[i] = i;
  std::function<PolyScalar(int, std::vector<int>&)> det =
      [&](int row, std::vector<int>& cs) -> PolyScalar {
    if (cs.empty()) return PolyScalar::constant(n, Rational(1));
    PolyScalar out(n);
    for (std::size_t k = 0; k < cs.size(); ++k) {
      int c = cs[k];
      if (j[row][c].is_zero()) continue;
      std::vector<int> rest;
      rest.reserve(cs.size() - 1);
      for (std::size_t m = 0; m < cs.size(); ++m)
        if (m != k) rest.push_back(cs[m]);
      PolyScalar sub = det(row + 1, rest);
      PolyScalar term = j[row][c] * sub;
      if (k % 2) term = -term;
      out += term;
    }
    return out;
  };
  return det(0, cols);
}

CompiledPoly CompiledPoly::from(const PolyScalar& p) {
  CompiledPoly out;
  out.terms.reserve(p.term_count());
  for (const auto& [e, c] : p.terms()) out.terms.push_back({c.get_d(), e});
  return out;
}

double CompiledPoly::eval(const double* x) const {
  double out = 0;
  for (const auto& t : terms) {
    double m = t.c;
    for (std::size_t i = 0; i < t.e.size(); ++i) {
      unsigned k = t.e[i];
      double xi = x[i];
      while (k--) m *= xi;
    }
    out += m;
  }
  return out;
}

}  // namespace sflab
