#pragma once

// RMSE and the multi-seed benchmark harness.  Each seed s in 0..n_seeds-1
// draws its own split and initial model from s; both training modes see the
// same split and the same initial model for a given seed.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "tskfnn/dataset.hpp"
#include "tskfnn/trainer.hpp"

namespace tskfnn {

/// sqrt(mean((p - t)^2)); throws std::invalid_argument on empty or mismatched input.
double rmse(const Eigen::VectorXd& predictions, const Eigen::VectorXd& targets);

struct SeedRun {
  std::uint64_t seed = 0;
  bool failed = false;
  std::string failure;
  double test_rmse = 0.0;
  double train_rmse = 0.0;
  std::size_t epochs = 0;
  double seconds = 0.0;
  Eigen::VectorXd predicted;  // test split, evaluation units
};

struct ExperimentResult {
  std::string benchmark;
  TrainMode mode = TrainMode::kStepwise;
  Eigen::Index rules = 0;
  Eigen::Index parameter_count = 0;
  double eta0 = 0.0;
  bool price_units = false;  // RMSE in original target units instead of [0,1]
  std::vector<SeedRun> runs;
  double mean_rmse = 0.0;
  double std_rmse = 0.0;
  std::size_t failures = 0;
  Eigen::VectorXd actual;  // test targets of the first seed, evaluation units

  std::vector<double> test_rmses() const;  // completed seeds only, seed order
};

struct BenchmarkOptions {
  Protocol protocol = Protocol::kAutoMpgCase1;
  Eigen::Index rules = 2;
  TrainConfig train;                  // mode, thresholds and caps; seed is overridden per run
  std::optional<double> eta0;         // protocol default when unset
  std::size_t n_seeds = 10;
  std::size_t threads = 1;
};

/// Normalized train/test pair for one seed, scaler fit on train only.
struct PreparedSplit {
  Dataset train;
  Dataset test;
  Dataset raw_test;
};

PreparedSplit prepare_split(const Dataset& full, Protocol protocol, std::uint64_t seed);

/// Test-split predictions and targets in evaluation units: normalized for
/// regression protocols, original prices for price series.
struct Evaluation {
  Eigen::VectorXd predicted;
  Eigen::VectorXd actual;
  double rmse = 0.0;
};

Evaluation evaluate(const Modeld& model, const PreparedSplit& split, Protocol protocol);

/// The starting point both training modes use for `seed`.
Modeld benchmark_initial_model(const PreparedSplit& split, Eigen::Index rules, std::uint64_t seed);

ExperimentResult run_benchmark(const Dataset& full, const BenchmarkOptions& options);

nlohmann::json experiment_to_json(const ExperimentResult& result);

/// Plain-text table: method, no. neurons (rule count), mean RMSE.
std::string format_table(const std::vector<ExperimentResult>& results);

/// Method label used in tables.
std::string method_label(TrainMode mode);

}  // namespace tskfnn
