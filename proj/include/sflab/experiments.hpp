#pragma once

#include <string>
#include <vector>

#include "sflab/io.hpp"
#include "sflab/measure.hpp"

namespace sflab {

// One experiment invocation: the runner name, the structure file it acts
// on, optional report destinations, and free-form parameters. Runners fill
// defaulted parameters and echo the resolved set into the report header.
struct ExperimentConfig {
  std::string experiment;
  std::string structure_path;
  std::string output_path;  // JSON report file; empty = do not write
  std::string csv_path;     // row table as CSV; empty = do not write
  Json params = Json::object();
};

ExperimentConfig config_from_json(const Json& j);
ExperimentConfig load_config(const std::string& path);

const std::vector<std::string>& experiment_names();

// Runs one experiment and returns its report. Same config, same bytes:
// every random draw comes from the seed parameter, and the report carries
// the structure hash, the seed, and the tolerances it was checked against.
// Writes no files; callers decide where the report goes.
Json run_experiment(const ExperimentConfig& cfg);

// Named density models shared by the measure experiments: "uniform",
// "wave" (1.5 + sin(x_0)/2), "piecewise" (seeded cell-constant in [0.5, 2]).
DensityModel experiment_density(const std::string& name, uint64_t seed);

// Flattens report["results"]["table"] into CSV-ready strings.
void report_table(const Json& report, std::vector<std::string>& header,
                  std::vector<std::vector<std::string>>& rows);

// Provenance line, aligned table, verdict; for terminal output.
std::string report_summary(const Json& report);

}  // namespace sflab
