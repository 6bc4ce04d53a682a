#include "tskfnn/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>

#include "json.hpp"

#include "tskfnn/gradients.hpp"
#include "tskfnn/learning_rate.hpp"
#include "tskfnn/parameters.hpp"
#include "tskfnn/premise_target.hpp"

namespace tskfnn {

namespace {

using Trace = BatchTrace<double>;

double mean_premise_objective(const Trace& trace, const PremiseTargets<double>& targets) {
  return premise_objective(trace.activation, targets.psi) / static_cast<double>(trace.activation.size());
}

double mean_output_objective(const Trace& trace, const Eigen::VectorXd& y) {
  return output_objective(trace.output, y) / static_cast<double>(y.size());
}

// Quantities compared against delta_mu / delta_e.
double premise_stop_value(const Trace& trace, const PremiseTargets<double>& targets, StopScale scale) {
  return scale == StopScale::kMean ? mean_premise_objective(trace, targets)
                                   : premise_objective(trace.activation, targets.psi);
}

double output_stop_value(const Trace& trace, const Eigen::VectorXd& y, StopScale scale) {
  return scale == StopScale::kMean ? mean_output_objective(trace, y) : output_objective(trace.output, y);
}

void require_finite(double value, std::size_t epoch, const char* phase) {
  if (std::isnan(value)) throw TrainingAborted(epoch, phase);
}

void notify(const TrainConfig& cfg, TrainEventKind kind, std::size_t epoch, std::size_t step) {
  if (cfg.observer) cfg.observer(TrainEvent{kind, epoch, step});
}

void check_inputs(const Modeld& model, const Dataset& data, const TrainConfig& cfg, TrainMode expected) {
  cfg.validate();
  if (cfg.mode != expected)
    throw ConfigurationError(std::string("trainer called with mode ") + std::string(to_string(cfg.mode)));
  model.validate();
  if (data.size() == 0) throw ConfigurationError("training data is empty");
  if (data.input_dim() != model.input_dim)
    throw ConfigurationError("training data has " + std::to_string(data.input_dim()) + " inputs, model expects " +
                             std::to_string(model.input_dim));
  if (data.targets.size() != data.size()) throw ConfigurationError("training data targets/inputs disagree");
}

void emit_progress(const TrainConfig& cfg, const TrainReport& report) {
  if (cfg.progress == nullptr) return;
  const auto last = report.epochs_run - 1;
  nlohmann::json line = {{"epoch", report.epochs_run},
                         {"J1", report.j1_history[last]},
                         {"J2", std::isnan(report.j2_history[last]) ? nlohmann::json(nullptr)
                                                                      : nlohmann::json(report.j2_history[last])},
                         {"J3", report.j3_history[last]},
                         {"rmse", report.rmse_history[last]}};
  *cfg.progress << line.dump() << '\n';
  cfg.progress->flush();
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// Applies theta <- theta + eta * delta to the premise block and updates its rates.
void step_premise(Modeld& model, LrState<double>& lr, const Eigen::VectorXd& delta, const TrainConfig& cfg) {
  set_premise_vector(model, Eigen::VectorXd(premise_vector(model) + lr.eta.cwiseProduct(delta)));
  clamp_shape_regulators(model);
  lr_update(lr, delta, cfg.alpha, cfg.zeta);
}

void step_consequent(Modeld& model, LrState<double>& lr, const Eigen::VectorXd& delta, const TrainConfig& cfg) {
  set_consequent_vector(model, Eigen::VectorXd(consequent_vector(model) + lr.eta.cwiseProduct(delta)));
  lr_update(lr, delta, cfg.alpha, cfg.zeta);
}

void finish(TrainReport& report, const Modeld& best, const Dataset& data, const Stopwatch& clock) {
  const Eigen::VectorXd out = predict(best, data.inputs);
  report.train_rmse = std::sqrt((out - data.targets).squaredNorm() / static_cast<double>(data.size()));
  report.wall_seconds = clock.seconds();
}

}  // namespace

std::string_view to_string(TrainMode mode) { return mode == TrainMode::kStepwise ? "stepwise" : "backprop"; }

TrainMode parse_train_mode(std::string_view name) {
  if (name == "stepwise") return TrainMode::kStepwise;
  if (name == "backprop") return TrainMode::kBackprop;
  throw ConfigurationError("unknown training mode '" + std::string(name) + "'");
}

std::string_view to_string(StopScale scale) { return scale == StopScale::kMean ? "mean" : "sum"; }

StopScale parse_stop_scale(std::string_view name) {
  if (name == "mean") return StopScale::kMean;
  if (name == "sum") return StopScale::kSum;
  throw ConfigurationError("unknown stop scale '" + std::string(name) + "'");
}

TrainingAborted::TrainingAborted(std::size_t epoch, std::string phase)
    : std::runtime_error("training aborted: NaN objective in epoch " + std::to_string(epoch) + " during " + phase),
      epoch_(epoch),
      phase_(std::move(phase)) {}

void TrainConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigurationError(std::string(name) + " must be positive");
  };
  positive(eta0, "eta0");
  positive(delta_mu, "delta_mu");
  positive(delta_e, "delta_e");
  positive(epsilon, "epsilon");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigurationError("alpha must lie in (0, 1)");
  if (!(zeta > 0.0 && zeta < 1.0)) throw ConfigurationError("zeta must lie in (0, 1)");
  if (iter_max == 0) throw ConfigurationError("iter_max must be positive");
  if (t_max == 0) throw ConfigurationError("t_max must be positive");
  if (tprime_max == 0) throw ConfigurationError("tprime_max must be positive");
}

TrainResult train_stepwise(Modeld model, const Dataset& data, const TrainConfig& cfg) {
  check_inputs(model, data, cfg, TrainMode::kStepwise);
  const Stopwatch clock;
  const auto& x = data.inputs;
  const auto& y = data.targets;

  TrainReport report;
  report.mode = TrainMode::kStepwise;
  Trace trace = forward_batch(model, x);
  PremiseTargets<double> targets = solve_targets(trace.firing, trace.rule_output, y);
  double e1 = projection_objective(trace.firing, targets.psi);
  require_finite(e1, 0, "initialization");

  auto premise_lr = LrState<double>::fresh(premise_size(model), cfg.eta0);
  auto consequent_lr = LrState<double>::fresh(consequent_size(model), cfg.eta0);
  Modeld best = model;
  double best_j3 = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 1; epoch <= cfg.iter_max; ++epoch) {
    targets = solve_targets(trace.firing, trace.rule_output, y);
    report.degenerate_instances += targets.degenerate;
    notify(cfg, TrainEventKind::kTargetsSolved, epoch, 0);

    // Premise parameters towards psi.
    premise_lr.reset(cfg.eta0);
    double e2 = premise_stop_value(trace, targets, cfg.stop_scale);
    require_finite(e2, epoch, "premise");
    std::size_t p_steps = 0;
    for (std::size_t t = 1; t <= cfg.t_max; ++t) {
      const auto grad = grad_premise(model, trace, targets);
      report.clamped_gradients += grad.clamped;
      step_premise(model, premise_lr, flatten(grad), cfg);
      trace = forward_batch(model, x);
      ++p_steps;
      notify(cfg, TrainEventKind::kPremiseStep, epoch, t);
      const double e2_new = premise_stop_value(trace, targets, cfg.stop_scale);
      require_finite(e2_new, epoch, "premise");
      if (std::abs(e2 - e2_new) < cfg.delta_mu) break;
      e2 = e2_new;
    }

    // Consequents against the output error.
    consequent_lr.reset(cfg.eta0);
    double e3 = output_stop_value(trace, y, cfg.stop_scale);
    require_finite(e3, epoch, "consequent");
    std::size_t c_steps = 0;
    for (std::size_t t = 1; t <= cfg.tprime_max; ++t) {
      const auto grad = grad_consequent(model, trace, x, y);
      report.clamped_gradients += grad.clamped;
      step_consequent(model, consequent_lr, flatten(grad), cfg);
      refresh_consequents(model, x, trace);
      ++c_steps;
      notify(cfg, TrainEventKind::kConsequentStep, epoch, t);
      const double e3_new = output_stop_value(trace, y, cfg.stop_scale);
      require_finite(e3_new, epoch, "consequent");
      if (std::abs(e3 - e3_new) < cfg.delta_e) break;
      e3 = e3_new;
    }

    // J1 at the optimum of the projection problem for the current model.
    const auto resolved = solve_targets(trace.firing, trace.rule_output, y);
    const double e1_new = projection_objective(trace.firing, resolved.psi);
    require_finite(e1_new, epoch, "projection");
    const double j3 = mean_output_objective(trace, y);
    report.epochs_run = epoch;
    report.j1_history.push_back(e1_new);
    report.j2_history.push_back(mean_premise_objective(trace, targets));
    report.j3_history.push_back(j3);
    report.rmse_history.push_back(std::sqrt(2.0 * j3));
    report.premise_steps.push_back(p_steps);
    report.consequent_steps.push_back(c_steps);
    if (j3 < best_j3) {
      best_j3 = j3;
      best = model;
      report.best_epoch = epoch;
    }
    emit_progress(cfg, report);
    notify(cfg, TrainEventKind::kEpochEnd, epoch, 0);
    if (std::abs(e1 - e1_new) < cfg.epsilon) break;
    e1 = e1_new;
  }

  finish(report, best, data, clock);
  return {std::move(best), std::move(report)};
}

TrainResult train_backprop(Modeld model, const Dataset& data, const TrainConfig& cfg) {
  check_inputs(model, data, cfg, TrainMode::kBackprop);
  const Stopwatch clock;
  const auto& x = data.inputs;
  const auto& y = data.targets;

  TrainReport report;
  report.mode = TrainMode::kBackprop;
  Trace trace = forward_batch(model, x);
  double j3_prev = output_objective(trace.output, y);
  require_finite(j3_prev, 0, "initialization");

  auto premise_lr = LrState<double>::fresh(premise_size(model), cfg.eta0);
  auto consequent_lr = LrState<double>::fresh(consequent_size(model), cfg.eta0);
  Modeld best = model;
  double best_j3 = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 1; epoch <= cfg.iter_max; ++epoch) {
    premise_lr.reset(cfg.eta0);
    consequent_lr.reset(cfg.eta0);
    double e3 = output_stop_value(trace, y, cfg.stop_scale);
    std::size_t steps = 0;
    for (std::size_t t = 1; t <= cfg.tprime_max; ++t) {
      const auto grad = grad_backprop(model, trace, x, y);
      report.clamped_gradients += grad.premise.clamped + grad.consequent.clamped;
      step_premise(model, premise_lr, flatten(grad.premise), cfg);
      step_consequent(model, consequent_lr, flatten(grad.consequent), cfg);
      trace = forward_batch(model, x);
      ++steps;
      notify(cfg, TrainEventKind::kJointStep, epoch, t);
      const double e3_new = output_stop_value(trace, y, cfg.stop_scale);
      require_finite(e3_new, epoch, "backprop");
      if (std::abs(e3 - e3_new) < cfg.delta_e) break;
      e3 = e3_new;
    }

    const auto targets = solve_targets(trace.firing, trace.rule_output, y);
    report.degenerate_instances += targets.degenerate;
    const double j3_sum = output_objective(trace.output, y);
    const double j3 = j3_sum / static_cast<double>(y.size());
    report.epochs_run = epoch;
    report.j1_history.push_back(projection_objective(trace.firing, targets.psi));
    report.j2_history.push_back(std::numeric_limits<double>::quiet_NaN());
    report.j3_history.push_back(j3);
    report.rmse_history.push_back(std::sqrt(2.0 * j3));
    report.premise_steps.push_back(steps);
    report.consequent_steps.push_back(steps);
    if (j3 < best_j3) {
      best_j3 = j3;
      best = model;
      report.best_epoch = epoch;
    }
    emit_progress(cfg, report);
    notify(cfg, TrainEventKind::kEpochEnd, epoch, 0);
    if (std::abs(j3_prev - j3_sum) < cfg.epsilon) break;
    j3_prev = j3_sum;
  }

  finish(report, best, data, clock);
  return {std::move(best), std::move(report)};
}

TrainResult train(Modeld model, const Dataset& data, const TrainConfig& cfg) {
  return cfg.mode == TrainMode::kStepwise ? train_stepwise(std::move(model), data, cfg)
                                          : train_backprop(std::move(model), data, cfg);
}

Modeld initial_model(const Dataset& train_data, Eigen::Index rules, std::uint64_t seed) {
  if (train_data.size() == 0) return init_random<double>(train_data.input_dim(), rules, seed);
  InputRange<double> range{train_data.inputs.colwise().minCoeff().transpose(),
                           train_data.inputs.colwise().maxCoeff().transpose()};
  return init_random<double>(train_data.input_dim(), rules, seed, range);
}

}  // namespace tskfnn
