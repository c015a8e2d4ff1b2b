#include "sflab/io.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>

#include "sflab/errors.hpp"

namespace sflab {

namespace {

const Json& need(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(std::string("structure file is missing the '") + key + "' entry");
  return *it;
}

std::vector<double> number_list(const Json& j, const char* what) {
  if (!j.is_array()) throw Error(std::string(what) + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw Error(std::string(what) + " must be an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

Json poly_to_json(const PolyScalar& p) {
  Json terms = Json::array();
  for (const auto& [expo, coeff] : p.terms()) {
    Json t;
    t["coeff"] = rat_str(coeff);
    t["exponents"] = expo;
    terms.push_back(std::move(t));
  }
  return terms;
}

PolyScalar poly_from_json(int nvars, const Json& j) {
  if (!j.is_array()) throw Error("polynomial entries must be arrays of terms");
  PolyScalar p = PolyScalar::zero(nvars);
  for (const auto& t : j) {
    const Json& ce = need(t, "coeff");
    const Json& ee = need(t, "exponents");
    if (!ce.is_string()) throw Error("term coefficients must be rational strings");
    Exponents e;
    for (const auto& v : ee) e.push_back(v.get<unsigned>());
    if (static_cast<int>(e.size()) != nvars)
      throw Error("exponent list length does not match the dimension");
    p += PolyScalar::monomial(nvars, e, rat_parse(ce.get<std::string>()));
  }
  return p;
}

Json structure_to_json(const SubFinslerStructure& s) {
  Json j;
  j["format"] = "sflab-structure/1";
  j["name"] = s.name();
  j["dimension"] = s.dimension();
  j["fiber_dimension"] = s.fiber_dimension();

  Json fields = Json::array();
  for (const auto& f : s.fields()) {
    Json comps = Json::array();
    for (int jx = 0; jx < s.dimension(); ++jx) comps.push_back(poly_to_json(f.component(jx)));
    fields.push_back(std::move(comps));
  }
  j["fields"] = std::move(fields);

  Json norm;
  const NormFamily& nf = s.norm();
  switch (nf.kind()) {
    case NormKind::LP: {
      norm["kind"] = "lp";
      double p = nf.lp_exponent();
      if (std::isinf(p))
        norm["p"] = "infinity";
      else
        norm["p"] = p;
      break;
    }
    case NormKind::Quadratic: {
      norm["kind"] = "quadratic";
      Json rows = Json::array();
      for (const auto& row : nf.quad_entries()) {
        Json r = Json::array();
        for (const auto& e : row) r.push_back(poly_to_json(e));
        rows.push_back(std::move(r));
      }
      norm["entries"] = std::move(rows);
      break;
    }
    case NormKind::Polytope: {
      norm["kind"] = "polytope";
      norm["support"] = nf.support_vectors();
      norm["smoothing"] = nf.smoothing();
      break;
    }
  }
  j["norm"] = std::move(norm);

  Json box;
  box["lo"] = s.chart_box().lo;
  box["hi"] = s.chart_box().hi;
  j["chart_box"] = std::move(box);
  return j;
}

SubFinslerStructure structure_from_json(const Json& j) {
  int n = need(j, "dimension").get<int>();
  if (n < 1) throw Error("structure dimension must be positive");
  std::string name = j.contains("name") ? j["name"].get<std::string>() : "";

  const Json& jf = need(j, "fields");
  if (!jf.is_array() || jf.empty()) throw Error("structure needs at least one frame field");
  std::vector<PolyVectorField> fields;
  for (const auto& comps : jf) {
    if (!comps.is_array() || static_cast<int>(comps.size()) != n)
      throw Error("field component count does not match the dimension");
    PolyVectorField f(n);
    for (int c = 0; c < n; ++c) f.component(c) = poly_from_json(n, comps[c]);
    fields.push_back(std::move(f));
  }
  int k = static_cast<int>(fields.size());
  if (j.contains("fiber_dimension") && j["fiber_dimension"].get<int>() != k)
    throw Error("fiber dimension does not match the field count");

  const Json& jn = need(j, "norm");
  std::string kind = need(jn, "kind").get<std::string>();
  NormFamily norm = NormFamily::lp(k, 2.0);
  if (kind == "lp") {
    const Json& jp = need(jn, "p");
    double p = jp.is_string() ? std::numeric_limits<double>::infinity() : jp.get<double>();
    if (jp.is_string() && jp.get<std::string>() != "infinity" && jp.get<std::string>() != "inf")
      throw Error("lp exponent must be a number or 'infinity'");
    norm = NormFamily::lp(k, p);
  } else if (kind == "quadratic") {
    const Json& je = need(jn, "entries");
    std::vector<std::vector<PolyScalar>> g;
    for (const auto& row : je) {
      std::vector<PolyScalar> r;
      for (const auto& e : row) r.push_back(poly_from_json(n, e));
      g.push_back(std::move(r));
    }
    norm = NormFamily::quadratic(std::move(g));
  } else if (kind == "polytope") {
    std::vector<std::vector<double>> support;
    for (const auto& v : need(jn, "support")) support.push_back(number_list(v, "support vector"));
    double smoothing = jn.contains("smoothing") ? jn["smoothing"].get<double>() : 0.0;
    norm = NormFamily::polytope(k, std::move(support), smoothing);
  } else {
    throw Error("unknown norm kind: " + kind);
  }

  const Json& jb = need(j, "chart_box");
  std::vector<double> lo = number_list(need(jb, "lo"), "chart box bound");
  std::vector<double> hi = number_list(need(jb, "hi"), "chart box bound");
  if (static_cast<int>(lo.size()) != n || static_cast<int>(hi.size()) != n)
    throw Error("chart box bounds do not match the dimension");

  return SubFinslerStructure(std::move(fields), std::move(norm), Box(std::move(lo), std::move(hi)),
                             std::move(name));
}

SubFinslerStructure load_structure(const std::string& path) {
  return structure_from_json(read_json_file(path));
}

void save_structure(const SubFinslerStructure& s, const std::string& path) {
  write_json_file(structure_to_json(s), path);
}

std::string structure_hash(const SubFinslerStructure& s) {
  std::string bytes = structure_to_json(s).dump();
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string("fnv1a:") + buf;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("cannot parse " + path + ": " + e.what());
  }
}

void write_json_file(const Json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw Error("cannot write file: " + path);
}

std::string csv_escape(const std::string& field) {
  bool quote = field.find_first_of(",\"\r\n") != std::string::npos;
  if (!quote) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string csv_render(const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream out;
  auto line = [&out](const std::vector<std::string>& fields) {
    for (size_t i = 0; i < fields.size(); ++i) {
      if (i) out << ',';
      out << csv_escape(fields[i]);
    }
    out << "\r\n";
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out.str();
}

void write_csv_file(const std::string& path, const std::vector<std::string>& header,
                    const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path);
  out << csv_render(header, rows);
  if (!out) throw Error("cannot write file: " + path);
}

}  // namespace sflab
