#pragma once

// Training drivers.
//
// Stepwise (the default) alternates, per epoch:
//   1. desired firing strengths psi from the current model (closed form),
//   2. gradient steps on Gamma, M, beta pulling mu towards psi,
//   3. gradient steps on the consequents against the output error.
// Backprop is the baseline over the same architecture: gradient steps on every
// parameter against the output error, through the normalization layer.
//
// Both use per-parameter learning rates under the sign-agreement schedule in
// learning_rate.hpp and return the parameters with the lowest training error
// seen at the end of any epoch.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tskfnn/dataset.hpp"
#include "tskfnn/model.hpp"

namespace tskfnn {

enum class TrainMode { kStepwise, kBackprop };

std::string_view to_string(TrainMode mode);
TrainMode parse_train_mode(std::string_view name);

/// What the inner-loop thresholds delta_mu and delta_e compare: the plain
/// sums J2 and J3, or per-element means (J2 / NR, J3 / N).  With the mean
/// form and delta = 1e-3 the inner loops rarely run past one or two steps on
/// normalized data.
enum class StopScale { kSum, kMean };

std::string_view to_string(StopScale scale);
StopScale parse_stop_scale(std::string_view name);

/// Raised when an objective turns NaN; the message names epoch and phase.
class TrainingAborted : public std::runtime_error {
 public:
  TrainingAborted(std::size_t epoch, std::string phase);
  std::size_t epoch() const { return epoch_; }
  const std::string& phase() const { return phase_; }

 private:
  std::size_t epoch_;
  std::string phase_;
};

/// Hook points inside the training loop, mostly for tests.
enum class TrainEventKind { kTargetsSolved, kPremiseStep, kConsequentStep, kJointStep, kEpochEnd };

struct TrainEvent {
  TrainEventKind kind;
  std::size_t epoch;
  std::size_t step;
};

struct TrainConfig {
  double eta0 = 1e-3;
  double delta_mu = 1e-3;
  double delta_e = 1e-3;
  double epsilon = 1e-6;
  double alpha = 0.7;
  double zeta = 0.9;
  std::size_t iter_max = 200;
  std::size_t t_max = 500;
  std::size_t tprime_max = 500;
  TrainMode mode = TrainMode::kStepwise;
  StopScale stop_scale = StopScale::kSum;
  std::uint64_t seed = 0;

  std::ostream* progress = nullptr;  // one JSON object per epoch when set
  std::function<void(const TrainEvent&)> observer;

  /// Throws ConfigurationError naming the first bad field.
  void validate() const;
};

/// Per-epoch histories hold the objectives at the end of each epoch:
/// J1 = 1/2 sum (phi - psi)^2 with psi re-solved for the final parameters,
/// J2 = mean over N*R of 1/2 (mu - psi)^2 against the epoch's psi,
/// J3 = mean over N of 1/2 e^2.  Backprop has no J2 and records NaN.
struct TrainReport {
  TrainMode mode = TrainMode::kStepwise;
  std::size_t epochs_run = 0;
  std::vector<double> j1_history;
  std::vector<double> j2_history;
  std::vector<double> j3_history;
  std::vector<double> rmse_history;
  std::vector<std::size_t> premise_steps;     // P2 (or joint) steps per epoch
  std::vector<std::size_t> consequent_steps;  // P3 steps per epoch
  std::size_t best_epoch = 0;                 // 1-based epoch whose parameters are returned
  double train_rmse = 0.0;
  std::optional<double> test_rmse;
  std::size_t degenerate_instances = 0;
  std::size_t clamped_gradients = 0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  Modeld model;
  TrainReport report;
};

TrainResult train_stepwise(Modeld model, const Dataset& data, const TrainConfig& cfg);
TrainResult train_backprop(Modeld model, const Dataset& data, const TrainConfig& cfg);

/// Dispatches on cfg.mode.
TrainResult train(Modeld model, const Dataset& data, const TrainConfig& cfg);

/// Model initialized from the training split: centers span each input column.
Modeld initial_model(const Dataset& train_data, Eigen::Index rules, std::uint64_t seed);

}  // namespace tskfnn
