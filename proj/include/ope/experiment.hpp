#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ope/asymptotics.hpp"
#include "ope/bounds.hpp"
#include "ope/sampler.hpp"

namespace ope {

enum class Experiment { Sample, Stats, Bounds, Nevai, Universality, Report };

std::string experiment_name(Experiment e);
Experiment parse_experiment(const std::string& s);

/// Parsed and validated run configuration (schema version 1).
struct ExperimentConfig {
  Experiment experiment = Experiment::Stats;
  nlohmann::json measure;
  /// varying_gaussian given without params.n: the weight follows N = n.
  bool track_rank = false;
  std::vector<std::size_t> n_grid;
  ScaledStatistic statistic;
  std::size_t replicas = 1;
  std::uint64_t seed = 0;
  std::string output_dir = "opestat_out";
  SampleMethod method = SampleMethod::Hkpv;
  std::vector<double> eps_grid{0.1, 0.3};
  std::vector<double> deltas{0.05, 0.1, 0.2};
  std::vector<double> s_grid = default_s_grid();
  double point = 0.0;  // evaluation point for universality and Totik sweeps
  Box box;
  std::size_t box_grid = 41;
  Interval totik_interval{-0.5, 0.5};
  std::size_t totik_grid = 201;
  nlohmann::json raw;

  /// Throws ConfigurationError on any schema or invariant violation.
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  MeasurePtr measure_at(std::size_t n) const;

 private:
  MeasurePtr fixed_measure_;
};

ExperimentConfig load_config(const std::string& path);

struct OutputFile {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  nlohmann::json config;
  std::string version;
  ConstantA constant;
  std::vector<std::pair<std::string, double>> stage_seconds;
  std::vector<OutputFile> files;

  nlohmann::json to_json() const;
};

struct RunOptions {
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
};

/// Runs the configured experiment, writes CSV files and manifest.json.
RunManifest run(ExperimentConfig config, const RunOptions& options);

/// {"valid": bool, "errors": [...]} without running anything.
nlohmann::json validate_config_file(const std::string& path);

std::string sha256_file(const std::string& path);

/// Command-line entry point; returns the process exit status
/// (0 success, 2 usage error, 3 computation error).
int cli_main(int argc, char** argv);

}  // namespace ope
