#include <cstdio>
#include <limits>
#include <string>

#include "doctest.h"
#include "sflab/experiments.hpp"
#include "sflab/io.hpp"

using namespace sflab;

namespace {

std::string fixture(const std::string& name) {
  return std::string(SFLAB_FIXTURE_DIR) + "/" + name;
}

SubFinslerStructure heisenberg() {
  PolyVectorField x1(3), x2(3);
  x1.component(0) = PolyScalar::constant(3, Rational(1));
  x1.component(2) = PolyScalar::variable(3, 1).scaled(rat_parse("-1/2"));
  x2.component(1) = PolyScalar::constant(3, Rational(1));
  x2.component(2) = PolyScalar::variable(3, 0).scaled(rat_parse("1/2"));
  return SubFinslerStructure({x1, x2}, NormFamily::lp(2, 2.0), Box::cube(3, 3.0),
                             "heisenberg");
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/sflab_io_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_SUITE_BEGIN("io");

TEST_CASE("structure serialization round-trips exactly") {
  auto s = heisenberg();
  Json j = structure_to_json(s);
  auto back = structure_from_json(j);
  CHECK(structure_to_json(back).dump() == j.dump());
  CHECK(back.name() == "heisenberg");
  CHECK(back.dimension() == 3);
  CHECK(back.fiber_dimension() == 2);
  CHECK(structure_hash(back) == structure_hash(s));

  // The coefficients survive as exact rationals, not decimal shadows.
  CHECK(back.fields()[0].component(2) ==
        PolyScalar::variable(3, 1).scaled(rat_parse("-1/2")));
}

TEST_CASE("every norm kind survives the round-trip") {
  auto fields = heisenberg();
  auto with = [&](NormFamily n) {
    SubFinslerStructure s(fields.fields(), std::move(n), Box::cube(3, 2.0), "t");
    Json j = structure_to_json(s);
    CHECK(structure_to_json(structure_from_json(j)).dump() == j.dump());
    return j;
  };
  Json inf = with(NormFamily::lp(2, std::numeric_limits<double>::infinity()));
  CHECK(inf["norm"]["p"] == "infinity");
  with(NormFamily::lp(2, 1.5));

  std::vector<std::vector<PolyScalar>> g(2, std::vector<PolyScalar>(2));
  g[0][0] = PolyScalar::constant(3, Rational(1));
  g[1][1] = PolyScalar::constant(3, Rational(1)) +
            PolyScalar::variable(3, 0) * PolyScalar::variable(3, 0);
  g[0][1] = g[1][0] = PolyScalar::constant(3, Rational(0));
  with(NormFamily::quadratic(g));

  with(NormFamily::polytope(
      2, {{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}}, 1e-3));
}

TEST_CASE("structure hash is stable and content-sensitive") {
  auto s = heisenberg();
  CHECK(structure_hash(s) == structure_hash(s));
  CHECK(structure_hash(s).substr(0, 6) == "fnv1a:");

  auto other = s.with_norm(NormFamily::lp(2, 4.0), "heisenberg-l4");
  CHECK(structure_hash(other) != structure_hash(s));
}

TEST_CASE("file round-trip and load errors") {
  TempFile f("roundtrip.json");
  auto s = heisenberg();
  save_structure(s, f.path);
  auto back = load_structure(f.path);
  CHECK(structure_to_json(back).dump() == structure_to_json(s).dump());

  CHECK_THROWS_WITH_AS(load_structure("/nonexistent/nope.json"),
                       doctest::Contains("cannot open file"), Error);

  TempFile bad("bad.json");
  write_csv_file(bad.path, {"not"}, {{"json"}});
  CHECK_THROWS_WITH_AS(load_structure(bad.path), doctest::Contains("cannot parse"),
                       Error);
}

TEST_CASE("malformed structure documents raise specific errors") {
  Json good = structure_to_json(heisenberg());

  Json j = good;
  j.erase("fields");
  CHECK_THROWS_WITH_AS(structure_from_json(j), doctest::Contains("missing the 'fields'"),
                       Error);

  j = good;
  j["dimension"] = 0;
  CHECK_THROWS_WITH_AS(structure_from_json(j),
                       doctest::Contains("dimension must be positive"), Error);

  j = good;
  j["fields"][0][0][0]["exponents"] = Json::array({1, 0});
  CHECK_THROWS_WITH_AS(structure_from_json(j), doctest::Contains("exponent list"),
                       Error);

  j = good;
  j["fields"][0][0][0]["coeff"] = 0.5;
  CHECK_THROWS_WITH_AS(structure_from_json(j),
                       doctest::Contains("rational strings"), Error);

  j = good;
  j["norm"]["kind"] = "mystery";
  CHECK_THROWS_WITH_AS(structure_from_json(j),
                       doctest::Contains("unknown norm kind: mystery"), Error);

  j = good;
  j["chart_box"]["lo"] = Json::array({-1.0});
  CHECK_THROWS_WITH_AS(structure_from_json(j),
                       doctest::Contains("chart box bounds"), Error);
}

TEST_CASE("csv rendering follows the quoting rules") {
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_escape("line\nbreak") == "\"line\nbreak\"");

  std::string text = csv_render({"a", "b"}, {{"1", "x,y"}, {"2", "z"}});
  CHECK(text == "a,b\r\n1,\"x,y\"\r\n2,z\r\n");
}

TEST_CASE("fixture files load and describe the expected geometries") {
  auto heis = load_structure(fixture("heisenberg.json"));
  CHECK(heis.name() == "heisenberg");
  CHECK(heis.dimension() == 3);
  CHECK(heis.fiber_dimension() == 2);

  auto e2 = load_structure(fixture("euclidean2.json"));
  CHECK(e2.dimension() == 2);
  CHECK(e2.fiber_dimension() == 2);

  auto grushin = load_structure(fixture("grushin.json"));
  CHECK(grushin.fiber_dimension() == 2);
  CHECK(grushin.fields()[1].component(1) == PolyScalar::variable(2, 0));

  for (const char* name : {"heisenberg_linf.json", "heisenberg_l15.json",
                           "contact_perturbed.json"})
    CHECK_NOTHROW(load_structure(fixture(name)));
}

TEST_CASE("experiment configs parse and reject unknown entries") {
  Json j = {{"experiment", "flag"},
            {"structure", fixture("heisenberg.json")},
            {"parameters", {{"seed", 7}}}};
  auto cfg = config_from_json(j);
  CHECK(cfg.experiment == "flag");
  CHECK(cfg.params["seed"] == 7);

  j["typo"] = 1;
  CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("unknown config entry"),
                       Error);

  Json bad = {{"experiment", "no-such-runner"},
              {"structure", fixture("heisenberg.json")}};
  CHECK_THROWS_WITH_AS(run_experiment(config_from_json(bad)),
                       doctest::Contains("unknown experiment"), Error);
}

TEST_CASE("flag experiment reports the heisenberg growth data") {
  ExperimentConfig cfg;
  cfg.experiment = "flag";
  cfg.structure_path = fixture("heisenberg.json");
  Json report = run_experiment(cfg);

  CHECK(report["pass"] == true);
  CHECK(report["results"]["growth"] == Json::array({2, 3}));
  CHECK(report["results"]["homogeneous_dimension"] == 4);
  CHECK(report["provenance"]["structure_hash"] ==
        structure_hash(load_structure(cfg.structure_path)));
  CHECK(report["provenance"].contains("seed"));
  CHECK(report["provenance"].contains("tolerances"));

  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  report_table(report, header, rows);
  CHECK(header.front() == "level");
  CHECK(rows.size() == 2);

  std::string text = report_summary(report);
  CHECK(text.find("pass: yes") != std::string::npos);
  CHECK(text.find("fnv1a:") != std::string::npos);
}

TEST_CASE("dist experiment recovers a euclidean distance") {
  ExperimentConfig cfg;
  cfg.experiment = "dist";
  cfg.structure_path = fixture("euclidean2.json");
  cfg.params["a"] = Json::array({0.0, 0.0});
  cfg.params["b"] = Json::array({3.0, 4.0});
  Json report = run_experiment(cfg);
  CHECK(report["pass"] == true);
  CHECK(std::abs(report["results"]["value"].get<double>() - 5.0) < 1e-6);
}

TEST_CASE("unknown parameters are rejected with their name") {
  ExperimentConfig cfg;
  cfg.experiment = "flag";
  cfg.structure_path = fixture("heisenberg.json");
  cfg.params["depht_cap"] = 4;  // typo on purpose
  CHECK_THROWS_WITH_AS(run_experiment(cfg),
                       doctest::Contains("unknown parameter: depht_cap"), Error);

  cfg.params.clear();
  cfg.params["solver"] = "warp";
  ExperimentConfig d = cfg;
  d.experiment = "dist";
  d.params["a"] = Json::array({0.0, 0.0, 0.0});
  d.params["b"] = Json::array({1.0, 0.0, 0.0});
  d.structure_path = fixture("heisenberg.json");
  CHECK_THROWS_WITH_AS(run_experiment(d),
                       doctest::Contains("unknown solver preset: warp"), Error);
}

TEST_CASE("norm override changes the structure under test") {
  ExperimentConfig cfg;
  cfg.experiment = "flag";
  cfg.structure_path = fixture("heisenberg.json");
  cfg.params["norm"] = "lp:4";
  Json report = run_experiment(cfg);
  CHECK(report["provenance"]["structure"] == "heisenberg+lp:4");

  cfg.params["norm"] = "taxicab";
  CHECK_THROWS_WITH_AS(run_experiment(cfg), doctest::Contains("norm override"),
                       Error);
}

TEST_CASE("seeded experiments rerun to identical bytes") {
  ExperimentConfig cfg;
  cfg.experiment = "scaling";
  cfg.structure_path = fixture("heisenberg.json");
  cfg.params["seed"] = 20260816;
  cfg.params["pairs"] = 2;
  cfg.params["eps"] = Json::array({"1/2"});
  cfg.params["solver"] = "fast";

  Json first = run_experiment(cfg);
  Json second = run_experiment(cfg);
  CHECK(first.dump() == second.dump());
  CHECK(first["pass"] == true);

  cfg.params["seed"] = 20260817;
  Json shifted = run_experiment(cfg);
  CHECK(shifted.dump() != first.dump());
}

TEST_SUITE_END();
