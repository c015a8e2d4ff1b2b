#include "sflab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <sstream>

#include "sflab/cdlab.hpp"
#include "sflab/coords.hpp"
#include "sflab/errors.hpp"
#include "sflab/geodesic.hpp"
#include "sflab/nilpotent.hpp"
#include "sflab/pmgh.hpp"

namespace sflab {

namespace {

double unit(std::mt19937_64& g) { return (g() >> 11) * 0x1p-53; }

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// Tracks which parameters a runner consumed and echoes the resolved values
// (defaults included) so the provenance block shows the full configuration.
class Params {
 public:
  explicit Params(Json in) : in_(std::move(in)) {
    if (!in_.is_object()) throw Error("experiment parameters must be a JSON object");
    seed_ = fetch("seed", Json(0x5f1ab)).get<uint64_t>();
    out_["seed"] = seed_;
  }

  uint64_t seed() const { return seed_; }

  double num(const std::string& key, double def, double lo = -1e300, double hi = 1e300) {
    Json v = fetch(key, Json(def));
    if (!v.is_number()) throw Error("parameter '" + key + "' must be a number");
    double x = v.get<double>();
    if (x < lo || x > hi) throw Error("parameter '" + key + "' is out of range");
    out_[key] = x;
    return x;
  }

  int integer(const std::string& key, int def, int lo = std::numeric_limits<int>::min(),
              int hi = std::numeric_limits<int>::max()) {
    Json v = fetch(key, Json(def));
    if (!v.is_number_integer()) throw Error("parameter '" + key + "' must be an integer");
    int x = v.get<int>();
    if (x < lo || x > hi) throw Error("parameter '" + key + "' is out of range");
    out_[key] = x;
    return x;
  }

  bool flag(const std::string& key, bool def) {
    Json v = fetch(key, Json(def));
    if (!v.is_boolean()) throw Error("parameter '" + key + "' must be a boolean");
    out_[key] = v;
    return v.get<bool>();
  }

  std::string str(const std::string& key, const std::string& def) {
    Json v = fetch(key, Json(def));
    if (!v.is_string()) throw Error("parameter '" + key + "' must be a string");
    out_[key] = v;
    return v.get<std::string>();
  }

  std::vector<double> list(const std::string& key, std::vector<double> def,
                           double lo = -1e300) {
    Json v = fetch(key, Json(def));
    if (!v.is_array() || v.empty()) throw Error("parameter '" + key + "' must be a non-empty array");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw Error("parameter '" + key + "' must hold numbers");
      double x = e.get<double>();
      if (x < lo) throw Error("parameter '" + key + "' is out of range");
      out.push_back(x);
    }
    out_[key] = out;
    return out;
  }

  std::vector<std::string> names(const std::string& key, std::vector<std::string> def) {
    Json v = fetch(key, Json(def));
    if (!v.is_array() || v.empty()) throw Error("parameter '" + key + "' must be a non-empty array");
    std::vector<std::string> out;
    for (const auto& e : v) {
      if (!e.is_string()) throw Error("parameter '" + key + "' must hold strings");
      out.push_back(e.get<std::string>());
    }
    out_[key] = out;
    return out;
  }

  // Scale factors as exact rationals; accepts "1/4" strings and dyadic
  // numbers, echoes the canonical string form.
  std::vector<Rational> rats(const std::string& key, std::vector<std::string> def) {
    Json dv = Json::array();
    for (const auto& s : def) dv.push_back(s);
    Json v = fetch(key, dv);
    if (!v.is_array() || v.empty()) throw Error("parameter '" + key + "' must be a non-empty array");
    std::vector<Rational> out;
    Json echo = Json::array();
    for (const auto& e : v) {
      Rational r;
      if (e.is_string())
        r = rat_parse(e.get<std::string>());
      else if (e.is_number())
        r = Rational(e.get<double>());
      else
        throw Error("parameter '" + key + "' must hold rationals");
      if (r <= 0) throw Error("parameter '" + key + "' entries must be positive");
      echo.push_back(rat_str(r));
      out.push_back(std::move(r));
    }
    out_[key] = echo;
    return out;
  }

  std::vector<double> point(const std::string& key, int dim) {
    std::vector<double> def(dim, 0.0);
    auto v = list(key, def);
    if (static_cast<int>(v.size()) != dim)
      throw Error("parameter '" + key + "' must have " + std::to_string(dim) + " entries");
    return v;
  }

  std::vector<double> point_required(const std::string& key, int dim) {
    if (!in_.contains(key)) throw Error("experiment needs the parameter '" + key + "'");
    return point(key, dim);
  }

  const Json& resolved() const { return out_; }

  void finish() const {
    for (const auto& [k, v] : in_.items())
      if (!used_.count(k)) throw Error("unknown parameter: " + k);
  }

 private:
  Json fetch(const std::string& key, Json def) {
    used_.insert(key);
    if (in_.contains(key)) return in_.at(key);
    return def;
  }

  Json in_;
  Json out_ = Json::object();
  std::set<std::string> used_;
  uint64_t seed_ = 0;
};

struct Draft {
  Json results = Json::object();
  Json tolerances = Json::object();
  bool pass = true;
  std::string summary;
};

Json make_table(std::vector<std::string> columns, Json rows) {
  Json t;
  t["columns"] = std::move(columns);
  t["rows"] = std::move(rows);
  return t;
}

SolveOptions solve_preset(Params& p, const std::string& def) {
  std::string name = p.str("solver", def);
  SolveOptions o;
  if (name == "fast")
    o = SolveOptions::fast();
  else if (name == "standard")
    o = SolveOptions::standard();
  else if (name == "high")
    o = SolveOptions::high();
  else
    throw Error("unknown solver preset: " + name);
  o.endpoint_tol = p.num("endpoint_tol", o.endpoint_tol, 1e-12, 1.0);
  return o;
}

QuadratureOptions quad_preset(Params& p, uint64_t seed, const std::string& solver_def = "fast") {
  QuadratureOptions q;
  q.per_axis = p.integer("per_axis", 0, 0, 41);
  q.solve = solve_preset(p, solver_def);
  q.seed = seed;
  return q;
}

std::vector<double> sample_box(const Box& b, double margin, std::mt19937_64& g) {
  std::vector<double> x(b.dim());
  for (int j = 0; j < b.dim(); ++j) {
    double mid = 0.5 * (b.lo[j] + b.hi[j]);
    double hw = 0.5 * (b.hi[j] - b.lo[j]) * margin;
    x[j] = mid + (2.0 * unit(g) - 1.0) * hw;
  }
  return x;
}

// Seeded well-separated point pairs inside the margin-shrunk box.
std::vector<std::pair<std::vector<double>, std::vector<double>>> sample_pairs(
    const Box& b, double margin, int count, std::mt19937_64& g) {
  double min_ext = 1e300;
  for (int j = 0; j < b.dim(); ++j) min_ext = std::min(min_ext, b.hi[j] - b.lo[j]);
  std::vector<std::pair<std::vector<double>, std::vector<double>>> out;
  for (int i = 0; i < count; ++i) {
    auto a = sample_box(b, margin, g);
    auto c = sample_box(b, margin, g);
    for (int tries = 0; tries < 64; ++tries) {
      double sep = 0;
      for (int j = 0; j < b.dim(); ++j) sep = std::max(sep, std::fabs(a[j] - c[j]));
      if (sep >= 0.05 * min_ext) break;
      c = sample_box(b, margin, g);
    }
    out.emplace_back(std::move(a), std::move(c));
  }
  return out;
}

std::string join_ints(const std::vector<int>& v) {
  std::ostringstream os;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) os << ", ";
    os << v[i];
  }
  return os.str();
}

bool non_increasing(const std::vector<double>& v) {
  for (size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[i - 1] + 1e-12) return false;
  return true;
}

void run_flag(const SubFinslerStructure& s, Params& p, Draft& d) {
  auto pt = p.point("point", s.dimension());
  int cap = p.integer("depth_cap", 6, 1, 12);
  double svd_tol = p.num("svd_tol", 1e-9, 0.0, 1.0);
  d.tolerances["svd_tol"] = svd_tol;

  FlagReport fr = flag_at(s, pt, cap, svd_tol);
  d.results["growth"] = fr.growth;
  d.results["weights"] = fr.weights.w;
  d.results["step"] = fr.step;
  d.results["homogeneous_dimension"] = fr.homogeneous_dimension;
  d.results["regular"] = fr.regular;
  d.results["adapted_words"] = fr.adapted_words;
  Json rows = Json::array();
  for (size_t i = 0; i < fr.growth.size(); ++i)
    rows.push_back(Json::array({static_cast<int>(i) + 1, fr.growth[i]}));
  d.results["table"] = make_table({"level", "rank"}, std::move(rows));
  d.summary = "growth [" + join_ints(fr.growth) + "], step " + std::to_string(fr.step) +
              ", homogeneous dimension " + std::to_string(fr.homogeneous_dimension);
}

void run_privileged(const SubFinslerStructure& s, Params& p, Draft& d) {
  auto pt = p.point("point", s.dimension());
  int extra = p.integer("extra_cap", 2, 0, 8);
  int cap = p.integer("depth_cap", 6, 1, 12);

  PrivilegedChart chart = build_privileged(s, pt, extra, cap);
  d.results["weights"] = chart.weights.w;
  d.results["step"] = chart.flag.step;
  d.results["homogeneous_dimension"] = chart.flag.homogeneous_dimension;
  d.results["cap"] = chart.cap;
  d.results["center"] = chart.center;
  d.results["certified"] = true;
  Json rows = Json::array();
  for (int j = 0; j < chart.weights.dim(); ++j)
    rows.push_back(Json::array({j, chart.weights.w[j]}));
  d.results["table"] = make_table({"coordinate", "weight"}, std::move(rows));
  d.summary = "weights [" + join_ints(chart.weights.w) + "] certified, truncation degree " +
              std::to_string(chart.cap);
}

void run_nilpotent(const SubFinslerStructure& s, Params& p, Draft& d) {
  auto pt = p.point("point", s.dimension());
  double bhw = p.num("box_half_width", 64.0, 1.0, 1e6);

  PrivilegedChart chart = build_privileged(s, pt);
  NilpotentStructure nil = nilpotent_approximation(s, chart, bhw);
  bool homogeneous = true;
  for (const auto& f : nil.structure.fields())
    homogeneous = homogeneous && is_degree_minus_one(f, nil.weights);

  d.results["weights"] = nil.weights.w;
  d.results["step"] = nil.step;
  d.results["homogeneous_dimension"] = nil.dilations.homogeneous_dimension();
  d.results["algebra_dimension"] = nil.algebra_dimension;
  d.results["center_dimension"] = nil.center_dimension;
  d.results["homogeneous"] = homogeneous;
  Json hats = Json::array();
  for (const auto& f : nil.structure.fields()) {
    Json comps = Json::array();
    for (int j = 0; j < nil.structure.dimension(); ++j)
      comps.push_back(poly_to_json(f.component(j)));
    hats.push_back(std::move(comps));
  }
  d.results["hat_fields"] = std::move(hats);
  Json rows = Json::array();
  for (size_t i = 0; i < nil.basis_words.size(); ++i)
    rows.push_back(Json::array({static_cast<int>(i), join_ints(nil.basis_words[i]),
                                static_cast<int>(nil.basis_words[i].size())}));
  d.results["table"] = make_table({"basis", "word", "length"}, std::move(rows));
  d.pass = homogeneous;
  d.summary = "step " + std::to_string(nil.step) + " algebra, dimension " +
              std::to_string(nil.algebra_dimension) + ", center " +
              std::to_string(nil.center_dimension);
}

void run_dist(const SubFinslerStructure& s, Params& p, Draft& d) {
  auto a = p.point_required("a", s.dimension());
  auto b = p.point_required("b", s.dimension());
  SolveOptions opts = solve_preset(p, "standard");
  d.tolerances["endpoint_tol"] = opts.endpoint_tol;

  DistanceCertificate cert = distance(s, a, b, opts);
  d.results["value"] = cert.value;
  d.results["endpoint_error"] = cert.endpoint_error;
  d.results["feasible"] = cert.feasible;
  d.results["exact"] = cert.exact;
  d.results["segments"] = cert.segments;
  d.results["starts_used"] = cert.starts_used;
  d.results["table"] = make_table(
      {"value", "endpoint_error", "segments"},
      Json::array({Json::array({cert.value, cert.endpoint_error, cert.segments})}));
  d.pass = cert.feasible;
  d.summary = "distance " + fmt(cert.value) + ", endpoint error " + fmt(cert.endpoint_error);
}

void run_scaling(const SubFinslerStructure& s, Params& p, Draft& d) {
  auto pt = p.point("point", s.dimension());
  auto eps = p.rats("eps", {"1/2", "1/4", "1/8"});
  int pairs = p.integer("pairs", 5, 1, 64);
  double margin = p.num("margin", 0.8, 0.05, 1.0);
  double rel_tol = p.num("rel_tol", 0.02, 0.0, 1.0);
  SolveOptions opts = solve_preset(p, "standard");
  d.tolerances["rel_tol"] = rel_tol;
  d.tolerances["endpoint_tol"] = opts.endpoint_tol;

  PrivilegedChart chart = build_privileged(s, pt);
  Box zbox = safe_z_box(s, chart);
  SubFinslerStructure base = eps_structure(s, chart, Rational(1), zbox);
  DilationFamily dil(chart.weights);

  std::mt19937_64 rng(p.seed());
  auto zpairs = sample_pairs(zbox, margin, pairs, rng);

  Json rows = Json::array();
  double max_rel = 0;
  for (int i = 0; i < pairs; ++i) {
    const auto& [za, zb] = zpairs[i];
    double ref = distance(base, za, zb, opts).value;
    for (const auto& e : eps) {
      double ed = e.get_d();
      SubFinslerStructure se = eps_structure(s, chart, e, zbox);
      auto pa = dil.apply(za, 1.0 / ed);
      auto pb = dil.apply(zb, 1.0 / ed);
      double scaled = ed * distance(se, pa, pb, opts).value;
      double rel = std::fabs(scaled - ref) / std::max(ref, 1e-12);
      max_rel = std::max(max_rel, rel);
      rows.push_back(Json::array({rat_str(e), i, scaled, ref, rel}));
    }
  }
  d.results["max_rel_err"] = max_rel;
  d.results["table"] =
      make_table({"eps", "pair", "scaled_value", "reference", "rel_err"}, std::move(rows));
  d.pass = max_rel <= rel_tol;
  d.summary = "max relative identity gap " + fmt(max_rel) + " over " + std::to_string(pairs) +
              " pairs";
}

void run_converge(const SubFinslerStructure& s, Params& p, Draft& d) {
  auto pt = p.point("point", s.dimension());
  auto eps = p.rats("eps", {"1", "1/2", "1/4", "1/8", "1/16", "1/32"});
  int points = p.integer("points", 5, 2, 16);
  double margin = p.num("margin", 0.75, 0.05, 1.0);
  double tol_frac = p.num("tol_frac", 0.05, 0.0, 1.0);
  SolveOptions opts = solve_preset(p, "standard");
  d.tolerances["tol_frac"] = tol_frac;
  d.tolerances["endpoint_tol"] = opts.endpoint_tol;

  PrivilegedChart chart = build_privileged(s, pt);
  Box zbox = safe_z_box(s, chart);
  NilpotentStructure nil = nilpotent_approximation(s, chart);

  std::mt19937_64 rng(p.seed());
  std::vector<std::vector<double>> zs;
  for (int i = 0; i < points; ++i) zs.push_back(sample_box(zbox, margin, rng));

  std::vector<std::pair<int, int>> idx;
  for (int i = 0; i < points; ++i)
    for (int j = i + 1; j < points; ++j) idx.emplace_back(i, j);

  std::vector<double> dhat;
  double diameter = 0;
  for (const auto& [i, j] : idx) {
    double v = distance(nil.structure, zs[i], zs[j], opts).value;
    dhat.push_back(v);
    diameter = std::max(diameter, v);
  }

  Json rows = Json::array();
  std::vector<double> sups;
  for (const auto& e : eps) {
    SubFinslerStructure se = eps_structure(s, chart, e, zbox);
    double sup = 0;
    for (size_t k = 0; k < idx.size(); ++k) {
      double v = distance(se, zs[idx[k].first], zs[idx[k].second], opts).value;
      sup = std::max(sup, std::fabs(v - dhat[k]));
    }
    sups.push_back(sup);
    rows.push_back(Json::array({rat_str(e), sup}));
  }
  double final_frac = diameter > 0 ? sups.back() / diameter : 0.0;
  d.results["grid_diameter"] = diameter;
  d.results["sup_errors"] = sups;
  d.results["final_fraction"] = final_frac;
  d.results["table"] = make_table({"eps", "sup_error"}, std::move(rows));
  d.pass = non_increasing(sups) && final_frac <= tol_frac;
  d.summary = "sup error " + fmt(sups.front()) + " -> " + fmt(sups.back()) + " across " +
              std::to_string(sups.size()) + " levels, grid diameter " + fmt(diameter);
}

void run_ballbox(const SubFinslerStructure& s, Params& p, Draft& d) {
  auto pt = p.point("point", s.dimension());
  auto radii = p.list("radii", {0.1, 0.2, 0.4}, 1e-9);
  QuadratureOptions q = quad_preset(p, p.seed());
  d.tolerances["endpoint_tol"] = q.solve.endpoint_tol;

  PrivilegedChart chart = build_privileged(s, pt);
  BallBoxReport rep = ball_box_check(s, chart, radii, q);
  d.results["c_box"] = rep.c_box;
  d.results["c_outer_needed"] = rep.c_outer_needed;
  d.results["c_inner_needed"] = rep.c_inner_needed;
  d.results["violations"] = rep.violations;
  d.results["radii"] = rep.radii;
  d.results["table"] = make_table(
      {"c_box", "c_outer", "c_inner", "violations"},
      Json::array({Json::array({rep.c_box, rep.c_outer_needed, rep.c_inner_needed, rep.violations})}));
  d.pass = rep.violations == 0 && std::isfinite(rep.c_box) && rep.c_box > 0;
  d.summary = "box constant " + fmt(rep.c_box) + ", " + std::to_string(rep.violations) +
              " violations across " + std::to_string(rep.radii.size()) + " radii";
}

std::vector<double> default_radii() {
  std::vector<double> r;
  for (int i = 0; i < 8; ++i) r.push_back(0.05 * std::pow(8.0, i / 7.0));
  return r;
}

void run_ballmass(const SubFinslerStructure& s, Params& p, Draft& d) {
  auto pt = p.point("point", s.dimension());
  auto radii = p.list("radii", default_radii(), 1e-9);
  std::string density = p.str("density", "uniform");
  QuadratureOptions q = quad_preset(p, p.seed());
  d.tolerances["endpoint_tol"] = q.solve.endpoint_tol;

  BallMeasureCurve curve =
      ball_measure_curve(s, experiment_density(density, p.seed()), pt, radii, q);
  Json rows = Json::array();
  for (size_t i = 0; i < curve.radii.size(); ++i)
    rows.push_back(Json::array({curve.radii[i], curve.masses[i]}));
  d.results["method"] = curve.method;
  d.results["sample_count"] = curve.sample_count;
  d.results["table"] = make_table({"r", "mass"}, std::move(rows));
  d.pass = non_increasing(std::vector<double>(curve.masses.rbegin(), curve.masses.rend()));
  d.summary = "masses " + fmt(curve.masses.front()) + " -> " + fmt(curve.masses.back()) +
              " over radii " + fmt(curve.radii.front()) + " -> " + fmt(curve.radii.back());
}

void run_ahlfors(const SubFinslerStructure& s, Params& p, Draft& d) {
  auto pt = p.point("point", s.dimension());
  auto radii = p.list("radii", default_radii(), 1e-9);
  auto densities = p.names("densities", {"uniform"});
  double rel_tol = p.num("rel_tol", 0.05, 0.0, 1.0);
  QuadratureOptions q = quad_preset(p, p.seed());
  d.tolerances["rel_tol"] = rel_tol;
  d.tolerances["endpoint_tol"] = q.solve.endpoint_tol;

  double q_ref = static_cast<double>(flag_at(s, pt).homogeneous_dimension);
  std::vector<DensityModel> ds;
  for (const auto& name : densities) ds.push_back(experiment_density(name, p.seed()));
  auto curves = ball_measure_curves(s, ds, pt, radii, q);

  Json rows = Json::array();
  Json fits = Json::array();
  bool ok = true;
  std::ostringstream qs;
  for (size_t i = 0; i < curves.size(); ++i) {
    AhlforsFit fit = ahlfors_fit(curves[i]);
    double rel = std::fabs(fit.q_est - q_ref) / q_ref;
    ok = ok && rel <= rel_tol;
    rows.push_back(Json::array({densities[i], fit.q_est, fit.c_est, fit.residual, rel}));
    Json f;
    f["density"] = densities[i];
    f["q_est"] = fit.q_est;
    f["c_est"] = fit.c_est;
    f["residual"] = fit.residual;
    fits.push_back(std::move(f));
    if (i) qs << ", ";
    qs << fmt(fit.q_est);
  }
  d.results["q_ref"] = q_ref;
  d.results["fits"] = std::move(fits);
  d.results["table"] =
      make_table({"density", "q_est", "c_est", "residual", "rel_err"}, std::move(rows));
  d.pass = ok;
  d.summary = "fitted exponents [" + qs.str() + "] against flag dimension " + fmt(q_ref);
}

void run_mq(const SubFinslerStructure& s, Params& p, Draft& d) {
  auto pt = p.point("point", s.dimension());
  auto grids = p.list("grids", {7, 9}, 3);
  double rel_tol = p.num("rel_tol", 0.03, 0.0, 1.0);
  SolveOptions solve = solve_preset(p, "fast");
  d.tolerances["rel_tol"] = rel_tol;
  d.tolerances["endpoint_tol"] = solve.endpoint_tol;

  PrivilegedChart chart = build_privileged(s, pt);
  NilpotentStructure nil = nilpotent_approximation(s, chart);

  Json rows = Json::array();
  std::vector<double> values;
  for (double g : grids) {
    QuadratureOptions q;
    q.per_axis = static_cast<int>(g);
    q.solve = solve;
    q.seed = p.seed();
    double m = tangent_normalization(nil, q);
    values.push_back(m);
    rows.push_back(Json::array({static_cast<int>(g), m}));
  }
  double m_q = values.back();
  double drift = 0;
  for (double v : values) drift = std::max(drift, std::fabs(v - m_q) / m_q);
  d.results["m_q"] = m_q;
  d.results["drift"] = drift;
  d.results["table"] = make_table({"per_axis", "m_q"}, std::move(rows));
  d.pass = std::isfinite(m_q) && m_q > 0 && drift <= rel_tol;
  d.summary = "normalization " + fmt(m_q) + ", refinement drift " + fmt(drift);
}

void run_tangent_check(const SubFinslerStructure& s, Params& p, Draft& d) {
  auto pt = p.point("point", s.dimension());
  auto radii = p.list("radii", {0.5, 0.25}, 1e-9);
  int grid = p.integer("grid", 20, 4, 200);
  double cap = p.num("cap", 1.0, 0.1, 16.0);
  double coverage_eps = p.num("coverage_eps", 0.5, 0.0, 10.0);
  int targets = p.integer("targets", 12, 1, 200);
  int per_axis = p.integer("per_axis", 7, 3, 41);
  double tol_frac = p.num("tol_frac", 0.05, 0.0, 1.0);
  std::string density = p.str("density", "uniform");
  SolveOptions solve = solve_preset(p, "fast");
  d.tolerances["tol_frac"] = tol_frac;
  d.tolerances["endpoint_tol"] = solve.endpoint_tol;

  PrivilegedChart chart = build_privileged(s, pt);
  NilpotentStructure nil = nilpotent_approximation(s, chart);
  DensityModel den = experiment_density(density, p.seed());

  QuadratureOptions mq_opts;
  mq_opts.per_axis = per_axis;
  mq_opts.solve = solve;
  mq_opts.seed = p.seed();
  double m_q = tangent_normalization(nil, mq_opts);

  MetricFn tangent = memoized_metric(nil.structure, solve);

  std::mt19937_64 rng(p.seed() ^ 0xc0ffee);
  std::vector<std::vector<double>> tangent_targets;
  const auto& w = nil.weights.w;
  for (int attempts = 0; attempts < 64 * targets &&
                         static_cast<int>(tangent_targets.size()) < targets;
       ++attempts) {
    std::vector<double> z(s.dimension());
    for (int j = 0; j < s.dimension(); ++j)
      z[j] = (2.0 * unit(rng) - 1.0) * 0.9 * std::pow(cap, w[j]);
    if (tangent(std::vector<double>(s.dimension(), 0.0), z) <= 0.85 * cap)
      tangent_targets.push_back(std::move(z));
  }

  // Cone bump supported inside the unit tangent ball; discrepancy compares
  // the sample weights against m_q times its integral over the same cells.
  std::vector<std::function<double(const std::vector<double>&)>> testfns{
      [&tangent, cap, n = s.dimension()](const std::vector<double>& z) {
        return std::max(0.0, 1.0 - tangent(std::vector<double>(n, 0.0), z) / cap);
      }};

  Json rows = Json::array();
  std::vector<double> dist_col, cov_col, disc_col;
  for (double r : radii) {
    QuadratureOptions q;
    q.solve = solve;
    q.seed = p.seed();
    PointedSample sample = blowup_sample(s, den, pt, r, cap, grid, q);
    double dist_r = distortion(sample, tangent);
    double cov_r = coverage_defect(sample, tangent_targets, tangent, coverage_eps);
    double disc_r = measure_discrepancy(sample, m_q, testfns);
    dist_col.push_back(dist_r);
    cov_col.push_back(cov_r);
    disc_col.push_back(disc_r);
    rows.push_back(Json::array({r, sample.size(), dist_r, cov_r, disc_r}));
  }
  d.results["m_q"] = m_q;
  d.results["table"] = make_table(
      {"r", "points", "distortion", "coverage_defect", "discrepancy"}, std::move(rows));
  d.pass = non_increasing(dist_col) && non_increasing(cov_col) && non_increasing(disc_col) &&
           dist_col.back() <= tol_frac * cap;
  d.summary = "distortion " + fmt(dist_col.front()) + " -> " + fmt(dist_col.back()) + " over " +
              std::to_string(radii.size()) + " scales, final coverage defect " +
              fmt(cov_col.back());
}

void run_cd_scan(const SubFinslerStructure& s, Params& p, Draft& d) {
  auto n_grid = p.list("N_grid", {2.0, 5.0}, 1.0 + 1e-9);
  int pairs = p.integer("pairs", 2, 1, 32);
  int budget = p.integer("budget", 8, 1, 1024);
  double radius = p.num("radius", 0.25, 1e-6, 1e3);
  double margin = p.num("margin", 0.5, 0.01, 1.0);
  int bins = p.integer("bins", 0, 0, 256);
  bool require_flat = p.flag("require_flat", false);
  QuadratureOptions q = quad_preset(p, p.seed());
  if (q.per_axis == 0) q.per_axis = 5;
  CdOptions copts;
  copts.bins = bins;
  copts.solve = q.solve;
  d.tolerances["endpoint_tol"] = q.solve.endpoint_tol;

  DensityModel den = experiment_density("uniform", p.seed());
  std::mt19937_64 rng(p.seed());
  std::vector<std::pair<DiscreteMeasure, DiscreteMeasure>> family;
  for (int i = 0; i < pairs; ++i) {
    auto make_ball = [&]() {
      auto c = sample_box(s.chart_box(), margin, rng);
      PrivilegedChart chart = build_privileged(s, c);
      BallQuadrature quad(s, chart, radius, q);
      return ball_discrete_measure(quad, den, radius);
    };
    auto mu0 = make_ball();
    auto mu1 = make_ball();
    family.emplace_back(std::move(mu0), std::move(mu1));
  }

  Json rows = Json::array();
  std::vector<ViolationInstance> found;
  int spent = 0;
  for (int i = 0; i < pairs && spent < budget; ++i) {
    for (double N : n_grid) {
      if (spent >= budget) break;
      EntropyReport rep = cd_midpoint_check(s, family[i].first, family[i].second, N, 0.0, copts);
      ++spent;
      bool violated = rep.deficit > rep.eps_disc;
      rows.push_back(Json::array(
          {i, N, rep.deficit, rep.eps_disc, rep.transport_cost, violated}));
      if (violated) found.push_back({i, N, rep});
    }
  }
  std::sort(found.begin(), found.end(), [](const ViolationInstance& a, const ViolationInstance& b) {
    return a.report.deficit > b.report.deficit;
  });

  Json viols = Json::array();
  for (const auto& v : found) {
    Json e;
    e["pair"] = v.pair;
    e["N"] = v.N;
    e["deficit"] = v.report.deficit;
    e["eps_disc"] = v.report.eps_disc;
    viols.push_back(std::move(e));
  }
  d.results["evaluations"] = spent;
  d.results["violations"] = std::move(viols);
  d.results["table"] =
      make_table({"pair", "N", "deficit", "eps_disc", "transport_cost", "violation"},
                 std::move(rows));
  d.pass = require_flat ? found.empty() : true;
  d.summary = std::to_string(spent) + " evaluations, " + std::to_string(found.size()) +
              " deficits above their error estimate";
}

using Runner = void (*)(const SubFinslerStructure&, Params&, Draft&);

const std::vector<std::pair<std::string, Runner>>& runners() {
  static const std::vector<std::pair<std::string, Runner>> table{
      {"flag", run_flag},
      {"privileged", run_privileged},
      {"nilpotent", run_nilpotent},
      {"dist", run_dist},
      {"scaling", run_scaling},
      {"converge", run_converge},
      {"ballbox", run_ballbox},
      {"ballmass", run_ballmass},
      {"ahlfors", run_ahlfors},
      {"mq", run_mq},
      {"tangent-check", run_tangent_check},
      {"cd-scan", run_cd_scan},
  };
  return table;
}

}  // namespace

DensityModel experiment_density(const std::string& name, uint64_t seed) {
  if (name == "uniform")
    return DensityModel::from_function([](const std::vector<double>&) { return 1.0; }, 1.0, 1.0);
  if (name == "wave")
    return DensityModel::from_function(
        [](const std::vector<double>& x) { return 1.5 + 0.5 * std::sin(x[0]); }, 1.0, 2.0);
  if (name == "piecewise") {
    const double h = 0.25;
    return DensityModel::from_function(
        [seed, h](const std::vector<double>& x) {
          uint64_t acc = seed;
          for (double xi : x) {
            auto cell = static_cast<int64_t>(std::floor(xi / h));
            acc = splitmix64(acc ^ static_cast<uint64_t>(cell));
          }
          return 0.5 + 1.5 * ((acc >> 11) * 0x1p-53);
        },
        0.5, 2.0);
  }
  throw Error("unknown density: " + name);
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, fn] : runners()) out.push_back(name);
    return out;
  }();
  return names;
}

ExperimentConfig config_from_json(const Json& j) {
  ExperimentConfig cfg;
  if (!j.is_object()) throw Error("config must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (k == "experiment")
      cfg.experiment = v.get<std::string>();
    else if (k == "structure")
      cfg.structure_path = v.get<std::string>();
    else if (k == "output")
      cfg.output_path = v.get<std::string>();
    else if (k == "csv")
      cfg.csv_path = v.get<std::string>();
    else if (k == "parameters")
      cfg.params = v;
    else
      throw Error("unknown config entry: " + k);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  return config_from_json(read_json_file(path));
}

Json run_experiment(const ExperimentConfig& cfg) {
  if (cfg.experiment.empty()) throw Error("config needs an experiment name");
  Runner runner = nullptr;
  for (const auto& [name, fn] : runners())
    if (name == cfg.experiment) runner = fn;
  if (!runner) throw Error("unknown experiment: " + cfg.experiment);
  if (cfg.structure_path.empty()) throw Error("config needs a structure path");

  SubFinslerStructure s = load_structure(cfg.structure_path);
  Params p(cfg.params);
  std::string norm = p.str("norm", "");
  if (!norm.empty()) {
    if (norm.rfind("lp:", 0) != 0) throw Error("norm override must look like 'lp:<p>' or 'lp:inf'");
    std::string ps = norm.substr(3);
    double pval = (ps == "inf" || ps == "infinity") ? std::numeric_limits<double>::infinity()
                                                    : std::stod(ps);
    s = s.with_norm(NormFamily::lp(s.fiber_dimension(), pval), s.name() + "+" + norm);
  }

  Draft draft;
  runner(s, p, draft);
  p.finish();

  Json report;
  report["experiment"] = cfg.experiment;
  Json prov;
  prov["structure"] = s.name();
  prov["structure_file"] = cfg.structure_path;
  prov["structure_hash"] = structure_hash(s);
  prov["seed"] = p.seed();
  prov["tolerances"] = draft.tolerances;
  prov["parameters"] = p.resolved();
  report["provenance"] = std::move(prov);
  report["results"] = std::move(draft.results);
  report["pass"] = draft.pass;
  report["summary"] = draft.summary;
  return report;
}

void report_table(const Json& report, std::vector<std::string>& header,
                  std::vector<std::vector<std::string>>& rows) {
  header.clear();
  rows.clear();
  if (!report.contains("results") || !report["results"].contains("table")) return;
  const Json& t = report["results"]["table"];
  for (const auto& c : t["columns"]) header.push_back(c.get<std::string>());
  for (const auto& r : t["rows"]) {
    std::vector<std::string> row;
    for (const auto& cell : r)
      row.push_back(cell.is_string() ? cell.get<std::string>() : cell.dump());
    rows.push_back(std::move(row));
  }
}

std::string report_summary(const Json& report) {
  std::ostringstream os;
  os << report["experiment"].get<std::string>() << " on "
     << report["provenance"]["structure"].get<std::string>() << " ("
     << report["provenance"]["structure_hash"].get<std::string>() << ")\n";
  os << "seed " << report["provenance"]["seed"] << "\n";

  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  report_table(report, header, rows);
  if (!header.empty()) {
    std::vector<size_t> width(header.size());
    for (size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
    for (const auto& r : rows)
      for (size_t c = 0; c < r.size() && c < width.size(); ++c)
        width[c] = std::max(width[c], r[c].size());
    auto line = [&](const std::vector<std::string>& cells) {
      os << " ";
      for (size_t c = 0; c < cells.size(); ++c)
        os << " " << cells[c] << std::string(width[c] - cells[c].size() + 1, ' ');
      os << "\n";
    };
    line(header);
    for (const auto& r : rows) line(r);
  }
  os << report["summary"].get<std::string>() << "\n";
  os << "pass: " << (report["pass"].get<bool>() ? "yes" : "no") << "\n";
  return os.str();
}

}  // namespace sflab
