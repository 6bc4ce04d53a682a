#include "tskfnn/metrics.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace tskfnn {

double rmse(const Eigen::VectorXd& predictions, const Eigen::VectorXd& targets) {
  if (predictions.size() != targets.size())
    throw std::invalid_argument("rmse: " + std::to_string(predictions.size()) + " predictions vs " +
                                std::to_string(targets.size()) + " targets");
  if (predictions.size() == 0) throw std::invalid_argument("rmse: empty input");
  return std::sqrt((predictions - targets).squaredNorm() / static_cast<double>(predictions.size()));
}

std::vector<double> ExperimentResult::test_rmses() const {
  std::vector<double> out;
  for (const auto& r : runs)
    if (!r.failed) out.push_back(r.test_rmse);
  return out;
}

PreparedSplit prepare_split(const Dataset& full, Protocol protocol, std::uint64_t seed) {
  auto [train, test] = split(full, protocol, seed);
  const Scaler scaler = fit_scaler(train);
  PreparedSplit out{normalize(train, scaler), normalize(test, scaler), std::move(test)};
  return out;
}

Evaluation evaluate(const Modeld& model, const PreparedSplit& split, Protocol protocol) {
  Evaluation out;
  const Eigen::VectorXd raw = predict(model, split.test.inputs);
  if (protocol_info(protocol).time_series) {
    out.predicted = denormalize(raw, *split.test.scaler);
    out.actual = split.raw_test.targets;
  } else {
    out.predicted = raw;
    out.actual = split.test.targets;
  }
  out.rmse = rmse(out.predicted, out.actual);
  return out;
}

Modeld benchmark_initial_model(const PreparedSplit& split, Eigen::Index rules, std::uint64_t seed) {
  return initial_model(split.train, rules, seed);
}

namespace {

SeedRun run_seed(const Dataset& full, const BenchmarkOptions& options, double eta0, std::uint64_t seed) {
  SeedRun run;
  run.seed = seed;
  const PreparedSplit data = prepare_split(full, options.protocol, seed);
  TrainConfig cfg = options.train;
  cfg.seed = seed;
  cfg.eta0 = eta0;
  cfg.progress = nullptr;
  cfg.observer = nullptr;
  try {
    auto result = train(benchmark_initial_model(data, options.rules, seed), data.train, cfg);
    auto eval = evaluate(result.model, data, options.protocol);
    run.predicted = std::move(eval.predicted);
    run.test_rmse = eval.rmse;
    run.train_rmse = result.report.train_rmse;
    run.epochs = result.report.epochs_run;
    run.seconds = result.report.wall_seconds;
    if (!std::isfinite(run.test_rmse)) {
      run.failed = true;
      run.failure = "non-finite test RMSE";
    }
  } catch (const TrainingAborted& e) {
    run.failed = true;
    run.failure = e.what();
  }
  return run;
}

}  // namespace

ExperimentResult run_benchmark(const Dataset& full, const BenchmarkOptions& options) {
  if (options.rules < 1) throw ConfigurationError("rules must be >= 1");
  if (options.n_seeds == 0) throw ConfigurationError("n_seeds must be >= 1");
  const auto& info = protocol_info(options.protocol);

  ExperimentResult result;
  result.benchmark = std::string(info.name);
  result.mode = options.train.mode;
  result.rules = options.rules;
  result.eta0 = options.eta0.value_or(info.default_eta0);
  result.price_units = info.time_series;
  result.parameter_count = 2 * options.rules + 2 * options.rules * full.input_dim() +
                           options.rules * full.input_dim() * full.input_dim();
  {
    const PreparedSplit first = prepare_split(full, options.protocol, 0);
    result.actual = info.time_series ? first.raw_test.targets : first.test.targets;
  }

  result.runs.resize(options.n_seeds);
  const std::size_t workers = std::max<std::size_t>(1, std::min(options.threads, options.n_seeds));
  if (workers == 1) {
    for (std::size_t s = 0; s < options.n_seeds; ++s) result.runs[s] = run_seed(full, options, result.eta0, s);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t s = next++; s < options.n_seeds; s = next++)
            result.runs[s] = run_seed(full, options, result.eta0, s);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  const auto rmses = result.test_rmses();
  result.failures = options.n_seeds - rmses.size();
  if (!rmses.empty()) {
    result.mean_rmse = std::accumulate(rmses.begin(), rmses.end(), 0.0) / static_cast<double>(rmses.size());
    if (rmses.size() > 1) {
      double ss = 0.0;
      for (double v : rmses) ss += (v - result.mean_rmse) * (v - result.mean_rmse);
      result.std_rmse = std::sqrt(ss / static_cast<double>(rmses.size() - 1));
    }
  } else {
    result.mean_rmse = std::numeric_limits<double>::quiet_NaN();
  }
  return result;
}

std::string method_label(TrainMode mode) { return mode == TrainMode::kStepwise ? "TSK-ICFNN" : "BPFNN"; }

nlohmann::json experiment_to_json(const ExperimentResult& result) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : result.runs) {
    nlohmann::json j = {{"seed", r.seed}, {"failed", r.failed}};
    if (r.failed) {
      j["failure"] = r.failure;
    } else {
      j["test_rmse"] = r.test_rmse;
      j["train_rmse"] = r.train_rmse;
      j["epochs"] = r.epochs;
    }
    runs.push_back(std::move(j));
  }
  return {{"benchmark", result.benchmark},
          {"method", method_label(result.mode)},
          {"mode", std::string(to_string(result.mode))},
          {"rules", result.rules},
          {"parameter_count", result.parameter_count},
          {"eta0", result.eta0},
          {"rmse_units", result.price_units ? "price" : "normalized"},
          {"mean_rmse", std::isnan(result.mean_rmse) ? nlohmann::json(nullptr) : nlohmann::json(result.mean_rmse)},
          {"std_rmse", result.std_rmse},
          {"failures", result.failures},
          {"runs", runs}};
}

std::string format_table(const std::vector<ExperimentResult>& results) {
  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof line, "%-12s | %-11s | %-10s | %s\n", "Method", "no. neurons", "RMSE", "std");
  out << line;
  out << std::string(52, '-') << '\n';
  for (const auto& r : results) {
    std::snprintf(line, sizeof line, "%-12s | %-11lld | %-10.4f | %.4f\n", method_label(r.mode).c_str(),
                  static_cast<long long>(r.rules), r.mean_rmse, r.std_rmse);
    out << line;
  }
  return out.str();
}

}  // namespace tskfnn
