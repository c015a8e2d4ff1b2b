#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "sflab/errors.hpp"
#include "sflab/rational.hpp"

namespace sflab {

// Sentinel for the weighted degree of the zero polynomial.
inline constexpr long kNegInfinity = std::numeric_limits<long>::min();
// Sentinel order for functions vanishing to all tested orders.
inline constexpr int kUndetermined = -1;

using Exponents = std::vector<unsigned>;

// Weights of an adapted coordinate system: non-decreasing, first entry 1.
struct WeightVector {
  std::vector<int> w;

  WeightVector() = default;
  explicit WeightVector(std::vector<int> ws);

  int dim() const { return static_cast<int>(w.size()); }
  int step() const { return w.empty() ? 0 : w.back(); }
  long homogeneous_dimension() const;
  bool operator==(const WeightVector& o) const { return w == o.w; }
};

// Multivariate polynomial with exact rational coefficients.
// Invariant: no stored coefficient is zero.
class PolyScalar {
 public:
  PolyScalar() : n_(0) {}
  explicit PolyScalar(int nvars) : n_(nvars) {}

  static PolyScalar zero(int nvars) { return PolyScalar(nvars); }
  static PolyScalar constant(int nvars, const Rational& c);
  static PolyScalar variable(int nvars, int i);
  static PolyScalar monomial(int nvars, const Exponents& e, const Rational& c);

  int nvars() const { return n_; }
  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const;
  Rational constant_term() const;
  std::size_t term_count() const { return terms_.size(); }
  const std::map<Exponents, Rational>& terms() const { return terms_; }

  PolyScalar operator+(const PolyScalar& o) const;
  PolyScalar operator-(const PolyScalar& o) const;
  PolyScalar operator*(const PolyScalar& o) const;
  PolyScalar operator-() const;
  PolyScalar& operator+=(const PolyScalar& o);
  PolyScalar& operator-=(const PolyScalar& o);
  PolyScalar scaled(const Rational& c) const;
  bool operator==(const PolyScalar& o) const;
  bool operator!=(const PolyScalar& o) const { return !(*this == o); }

  PolyScalar derivative(int i) const;

  // Total degree; kNegInfinity for the zero polynomial (as long).
  long total_degree() const;
  // min over monomials of sum_i w_i * e_i; kNegInfinity for zero.
  long weighted_degree(const WeightVector& w) const;
  // Keeps monomials with weighted degree exactly d.
  PolyScalar weighted_part(const WeightVector& w, long d) const;
  // Drops monomials of total degree > cap (cap < 0 keeps everything).
  PolyScalar truncated(int cap) const;

  Rational eval(const RatPoint& x) const;
  double eval(const std::vector<double>& x) const;

  // Substitutes subst[i] for variable i; result truncated at cap if cap >= 0.
  // All subst entries must share one variable count.
  PolyScalar composed(const std::vector<PolyScalar>& subst, int cap = -1) const;

  void add_term(const Exponents& e, const Rational& c);

  std::string str(const std::vector<std::string>& names = {}) const;

 private:
  int n_;
  std::map<Exponents, Rational> terms_;
};

using PolyMap = std::vector<PolyScalar>;

PolyMap identity_map(int nvars);
// Component-wise composition f(g(.)), truncated at cap if cap >= 0.
PolyMap compose_map(const PolyMap& f, const PolyMap& g, int cap = -1);
std::vector<double> eval_map(const PolyMap& f, const std::vector<double>& x);
RatPoint eval_map(const PolyMap& f, const RatPoint& x);
// Formal inverse of f (f(0) = 0, invertible linear part) so that
// inverse(f)(f(z)) = z modulo total degree > cap. Throws Error when the
// linear part is singular.
PolyMap inverse_map(const PolyMap& f, int cap);
// Exact Jacobian determinant polynomial of a square map.
PolyScalar jacobian_determinant(const PolyMap& f);

// Exact dense solve A x = b over the rationals; throws Error when singular.
std::vector<Rational> solve_rational_system(std::vector<std::vector<Rational>> a,
                                            std::vector<Rational> b);

// Dense evaluation-friendly copy with double coefficients.
struct CompiledPoly {
  struct Term {
    double c;
    std::vector<unsigned> e;
  };
  std::vector<Term> terms;

  static CompiledPoly from(const PolyScalar& p);
  double eval(const double* x) const;
};

}  // namespace sflab
