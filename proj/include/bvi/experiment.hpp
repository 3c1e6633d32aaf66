#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bvi/algorithms.hpp"
#include "bvi/regularizers.hpp"
#include "bvi/targets.hpp"

namespace bvi {

enum class ExperimentKind { SingleRun, GaussianSweep, Sensitivity, Regression };
enum class AlgorithmKind { PrmmExact, McPrmm, Rmm, Vrb };

std::string to_string(ExperimentKind kind);
std::string to_string(AlgorithmKind kind);

/// Regularizer as written in a config; the sparse weights are expanded to
/// the family dimension when a run is set up.
struct RegularizerSpec {
  std::string kind = "null";
  double b1 = 0.5;
  double b2 = 2.0;
  std::vector<double> eta{1.0};
  bool skip_index_0 = false;
};

struct MethodSpec {
  std::string label;
  AlgorithmKind algorithm = AlgorithmKind::McPrmm;
  std::optional<double> alpha;
  std::optional<double> tau;
  RegularizerSpec regularizer;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::SingleRun;
  FamilyKind family = FamilyKind::FullGaussian;
  /// "gaussian" or "regression".
  std::string target = "gaussian";
  double mean_box = 0.5;
  RegressionSpec regression;
  std::vector<MethodSpec> methods;
  std::vector<double> alphas;
  std::vector<double> taus;
  std::vector<int> dims;
  std::vector<double> kappas;
  int N = 500;
  int K = 100;
  int n_replicates = 1;
  std::uint64_t seed = 1;
  /// Replicate indices to run; empty means 0..n_replicates-1.
  std::vector<int> replicates;
  double mu0 = 5.0;
  double sigma0 = 10.0;
  double stop_tol = 0.0;
  bool strict = false;
  int n_beta = 100;
  bool write_traces = true;
  std::string output_dir = "bvi-out";

  std::vector<int> replicate_ids() const;
};

/// Fills defaults for the experiment kind and checks ranges. Errors are
/// ConfigError with the offending field path in the message.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

/// Canned configuration for `bvi demo <name>`.
nlohmann::json demo_config(const std::string& name);
std::vector<std::string> demo_names();

/// One point of the experiment grid.
struct Setting {
  std::string label;
  MethodSpec method;
  double alpha = 1.0;
  double tau = 1.0;
  int d = 2;
  double kappa = 1.0;
};

std::vector<Setting> expand_settings(const ExperimentConfig& cfg);

/// Outcome of one (setting, replicate) run. Metric series have one entry per
/// iteration 0..K; a run that stopped early is padded (last value for a
/// converged run, the worst value for a diverged one).
struct RunResult {
  int setting = 0;
  int replicate = 0;
  RunStatus status = RunStatus::MaxIters;
  std::string error;
  int iterations = 0;
  int repairs = 0;
  double seconds = 0.0;
  RunTrace trace;
  std::vector<std::string> metric_names;
  std::vector<std::vector<double>> metrics;  // [metric][k]
  Eigen::VectorXd test_mse;
  std::optional<RegressionDataset> dataset;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<Setting> settings;
  std::vector<RunResult> runs;
  double seconds = 0.0;

  /// Median over replicates of metric `name` at iteration k of a setting.
  double median(int setting, const std::string& name, int k) const;
};

/// Runs every (setting, replicate) pair on `jobs` worker threads.
ExperimentResult run_experiment(const ExperimentConfig& cfg, int jobs = 1);

struct Summary {
  int count = 0;
  double mean = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
};

/// Statistics of the non-NaN values; the order of `values` does not matter.
Summary summarize(std::vector<double> values);

/// Writes traces/, aggregate.csv, final.csv, test_mse.csv (regression) and
/// manifest.json under `dir`. Throws std::runtime_error on I/O failure.
void write_outputs(const ExperimentResult& result, const std::filesystem::path& dir);

void write_aggregate_csv(std::ostream& os, const ExperimentResult& result);

}  // namespace bvi
