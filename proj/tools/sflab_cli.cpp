#include <cstdlib>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sflab/errors.hpp"
#include "sflab/experiments.hpp"

using sflab::ExperimentConfig;
using sflab::Json;

namespace {

int run_config(const ExperimentConfig& cfg, bool print_json) {
  Json report = sflab::run_experiment(cfg);
  if (!cfg.output_path.empty()) sflab::write_json_file(report, cfg.output_path);
  if (!cfg.csv_path.empty()) {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    sflab::report_table(report, header, rows);
    sflab::write_csv_file(cfg.csv_path, header, rows);
  }
  if (print_json)
    std::cout << report.dump(2) << "\n";
  else
    std::cout << sflab::report_summary(report);
  if (!report["pass"].get<bool>()) {
    std::cerr << "acceptance check failed: " << report["summary"].get<std::string>() << "\n";
    return 2;
  }
  return 0;
}

struct Sub {
  CLI::App* app = nullptr;
  std::shared_ptr<ExperimentConfig> cfg;
};

Sub make_sub(CLI::App& parent, const std::string& name, const std::string& desc) {
  Sub s;
  s.app = parent.add_subcommand(name, desc);
  s.cfg = std::make_shared<ExperimentConfig>();
  s.cfg->experiment = name;
  s.app->add_option("--structure", s.cfg->structure_path, "structure description file")
      ->required();
  s.app->add_option("--out", s.cfg->output_path, "write the JSON report here");
  s.app->add_option("--csv", s.cfg->csv_path, "write the row table as CSV here");
  auto cfg = s.cfg;
  s.app->add_option_function<uint64_t>(
      "--seed", [cfg](const uint64_t& v) { cfg->params["seed"] = v; }, "random draws seed");
  s.app->add_option_function<std::string>(
      "--norm", [cfg](const std::string& v) { cfg->params["norm"] = v; },
      "norm override, e.g. lp:1.5 or lp:inf");
  return s;
}

void add_point(Sub& s) {
  auto cfg = s.cfg;
  s.app->add_option_function<std::vector<double>>(
      "--point", [cfg](const std::vector<double>& v) { cfg->params["point"] = v; },
      "base point in chart coordinates");
}

void add_solver(Sub& s) {
  auto cfg = s.cfg;
  s.app->add_option_function<std::string>(
      "--solver", [cfg](const std::string& v) { cfg->params["solver"] = v; },
      "solver preset: fast, standard, high");
  s.app->add_option_function<double>(
      "--endpoint-tol", [cfg](const double& v) { cfg->params["endpoint_tol"] = v; },
      "endpoint feasibility tolerance");
}

template <typename T>
void add_param(Sub& s, const std::string& flag, const std::string& key, const std::string& desc) {
  auto cfg = s.cfg;
  s.app->add_option_function<T>(
      flag, [cfg, key](const T& v) { cfg->params[key] = v; }, desc);
}

void add_flag_param(Sub& s, const std::string& flag, const std::string& key, bool value,
                    const std::string& desc) {
  auto cfg = s.cfg;
  s.app->add_flag_callback(
      flag, [cfg, key, value] { cfg->params[key] = value; }, desc);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sub-Finsler geometry workbench"};
  app.fallthrough();
  app.require_subcommand(0, 1);

  std::string config_path;
  app.add_option("--config", config_path, "run the experiment described by a JSON config file");
  bool print_json = false;
  app.add_flag("--print-json", print_json, "print the JSON report instead of the summary");
  int threads = 0;
  app.add_option("--threads", threads, "worker count (sets SFLAB_THREADS)");

  std::vector<Sub> subs;

  {
    Sub s = make_sub(app, "flag", "growth vector and weights of the distribution at a point");
    add_point(s);
    add_param<int>(s, "--depth-cap", "depth_cap", "bracket depth cap");
    add_param<double>(s, "--svd-tol", "svd_tol", "rank tolerance");
    subs.push_back(s);
  }
  {
    Sub s = make_sub(app, "privileged", "build and certify privileged coordinates");
    add_point(s);
    add_param<int>(s, "--extra-cap", "extra_cap", "truncation slack above the step");
    add_param<int>(s, "--depth-cap", "depth_cap", "bracket depth cap");
    subs.push_back(s);
  }
  {
    Sub s = make_sub(app, "nilpotent", "nilpotent approximation and its algebra");
    add_point(s);
    add_param<double>(s, "--box-half-width", "box_half_width", "chart half-width of the limit");
    subs.push_back(s);
  }
  {
    Sub s = make_sub(app, "dist", "distance certificate between two chart points");
    add_solver(s);
    add_param<std::vector<double>>(s, "--a", "a", "start point");
    add_param<std::vector<double>>(s, "--b", "b", "end point");
    subs.push_back(s);
  }
  {
    Sub s = make_sub(app, "scaling", "dilation scaling identity check");
    add_point(s);
    add_solver(s);
    add_param<std::vector<std::string>>(s, "--eps", "eps", "scale factors, e.g. 1/2 1/4");
    add_param<int>(s, "--pairs", "pairs", "seeded point pairs");
    add_param<double>(s, "--margin", "margin", "sampling margin inside the safe box");
    add_param<double>(s, "--rel-tol", "rel_tol", "relative identity tolerance");
    subs.push_back(s);
  }
  {
    Sub s = make_sub(app, "converge", "rescaled distances against the tangent metric");
    add_point(s);
    add_solver(s);
    add_param<std::vector<std::string>>(s, "--eps", "eps", "scale ladder, e.g. 1 1/2 1/4");
    add_param<int>(s, "--points", "points", "seeded grid points");
    add_param<double>(s, "--margin", "margin", "sampling margin inside the safe box");
    add_param<double>(s, "--tol-frac", "tol_frac", "final error bound as a diameter fraction");
    subs.push_back(s);
  }
  {
    Sub s = make_sub(app, "ballbox", "two-sided box bracketing of small balls");
    add_point(s);
    add_solver(s);
    add_param<std::vector<double>>(s, "--radii", "radii", "ball radii");
    add_param<int>(s, "--per-axis", "per_axis", "grid cells per axis");
    subs.push_back(s);
  }
  {
    Sub s = make_sub(app, "ballmass", "ball mass curve over a radius sweep");
    add_point(s);
    add_solver(s);
    add_param<std::vector<double>>(s, "--radii", "radii", "ball radii");
    add_param<int>(s, "--per-axis", "per_axis", "grid cells per axis");
    add_param<std::string>(s, "--density", "density", "uniform, wave, or piecewise");
    subs.push_back(s);
  }
  {
    Sub s = make_sub(app, "ahlfors", "log-log exponent fit of ball masses");
    add_point(s);
    add_solver(s);
    add_param<std::vector<double>>(s, "--radii", "radii", "ball radii");
    add_param<int>(s, "--per-axis", "per_axis", "grid cells per axis");
    add_param<std::vector<std::string>>(s, "--densities", "densities",
                                        "density names to fit, e.g. uniform wave");
    add_param<double>(s, "--rel-tol", "rel_tol", "allowed exponent deviation");
    subs.push_back(s);
  }
  {
    Sub s = make_sub(app, "mq", "tangent measure normalization constant");
    add_point(s);
    add_solver(s);
    add_param<std::vector<double>>(s, "--grids", "grids", "per-axis refinement ladder");
    add_param<double>(s, "--rel-tol", "rel_tol", "allowed refinement drift");
    subs.push_back(s);
  }
  {
    Sub s = make_sub(app, "tangent-check", "blow-up convergence to the tangent space");
    add_point(s);
    add_solver(s);
    add_param<std::vector<double>>(s, "--radii", "radii", "blow-up scales");
    add_param<int>(s, "--grid", "grid", "sample grid size");
    add_param<double>(s, "--cap", "cap", "sampled tangent ball radius");
    add_param<double>(s, "--coverage-eps", "coverage_eps", "covering slack");
    add_param<int>(s, "--targets", "targets", "seeded coverage targets");
    add_param<int>(s, "--per-axis", "per_axis", "normalization quadrature cells per axis");
    add_param<double>(s, "--tol-frac", "tol_frac", "final distortion bound");
    add_param<std::string>(s, "--density", "density", "uniform, wave, or piecewise");
    subs.push_back(s);
  }
  {
    Sub s = make_sub(app, "cd-scan", "entropy midpoint convexity sweep");
    add_solver(s);
    add_param<std::vector<double>>(s, "--N-grid", "N_grid", "dimension parameters to test");
    add_param<int>(s, "--pairs", "pairs", "seeded ball measure pairs");
    add_param<int>(s, "--budget", "budget", "maximum midpoint evaluations");
    add_param<double>(s, "--radius", "radius", "ball radius of each measure");
    add_param<double>(s, "--margin", "margin", "center sampling margin");
    add_param<int>(s, "--bins", "bins", "shared entropy grid resolution");
    add_param<int>(s, "--per-axis", "per_axis", "ball quadrature cells per axis");
    add_flag_param(s, "--require-flat", "require_flat", true,
                   "fail when any deficit exceeds its error estimate");
    subs.push_back(s);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (threads > 0) setenv("SFLAB_THREADS", std::to_string(threads).c_str(), 1);

  try {
    for (const auto& s : subs)
      if (s.app->parsed()) {
        if (!config_path.empty()) {
          std::cerr << "error: pass either --config or one subcommand, not both\n";
          return 1;
        }
        return run_config(*s.cfg, print_json);
      }
    if (!config_path.empty()) return run_config(sflab::load_config(config_path), print_json);
  } catch (const sflab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  std::cout << app.help();
  return 1;
}
