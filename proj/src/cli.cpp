#include "tskfnn/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "tskfnn/dataset.hpp"
#include "tskfnn/metrics.hpp"
#include "tskfnn/serialization.hpp"
#include "tskfnn/trainer.hpp"

namespace tskfnn::cli {

namespace {

std::string number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::vector<std::string> protocol_names() {
  std::vector<std::string> names;
  for (auto p : all_protocols()) names.emplace_back(protocol_info(p).name);
  return names;
}

struct TrainingFlags {
  TrainConfig cfg;
  std::optional<double> eta0;
  std::string mode = "stepwise";
  std::string stop_scale = "sum";

  TrainConfig resolve(double default_eta0) const {
    TrainConfig out = cfg;
    out.eta0 = eta0.value_or(default_eta0);
    out.mode = parse_train_mode(mode);
    out.stop_scale = parse_stop_scale(stop_scale);
    return out;
  }
};

void add_training_flags(CLI::App* app, TrainingFlags& f) {
  app->add_option("--eta0", f.eta0, "Initial learning rate [protocol default, else 1e-3]");
  app->add_option("--delta-mu,--delta_mu", f.cfg.delta_mu, "Premise loop stop threshold")->capture_default_str();
  app->add_option("--delta-e,--delta_e", f.cfg.delta_e, "Consequent loop stop threshold")->capture_default_str();
  app->add_option("--epsilon", f.cfg.epsilon, "Outer loop stop threshold")->capture_default_str();
  app->add_option("--alpha", f.cfg.alpha, "Step averaging factor")->capture_default_str();
  app->add_option("--zeta", f.cfg.zeta, "Learning-rate decay factor")->capture_default_str();
  app->add_option("--iter-max,--iter_max", f.cfg.iter_max, "Maximum epochs")->capture_default_str();
  app->add_option("--t-max,--t_max", f.cfg.t_max, "Maximum premise steps per epoch")->capture_default_str();
  app->add_option("--tprime-max,--tprime_max", f.cfg.tprime_max, "Maximum consequent (or joint) steps per epoch")
      ->capture_default_str();
  app->add_option("--stop-scale,--stop_scale", f.stop_scale, "Inner-loop thresholds compare sum or mean objectives")
      ->check(CLI::IsMember({"sum", "mean"}))
      ->capture_default_str();
}

struct DataFlags {
  std::string data;
  std::string protocol;
  std::string schema;
};

void add_data_flags(CLI::App* app, DataFlags& f, bool protocol_required) {
  app->add_option("--data", f.data, "CSV data file")->required();
  auto* p = app->add_option("--protocol", f.protocol, "Benchmark protocol")->check(CLI::IsMember(protocol_names()));
  if (protocol_required) p->required();
  app->add_option("--schema", f.schema, "JSON column schema overriding the built-in layout");
}

std::optional<Protocol> chosen_protocol(const DataFlags& f) {
  if (f.protocol.empty()) return std::nullopt;
  return parse_protocol(f.protocol);
}

std::optional<CsvSchema> chosen_schema(const DataFlags& f) {
  if (f.schema.empty()) return std::nullopt;
  return load_schema(f.schema);
}

void write_text(const std::string& text, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  out << text;
  if (!out) throw FormatError("failed writing " + path);
}

// ---------------------------------------------------------------- train

struct TrainCommand {
  DataFlags data;
  TrainingFlags training;
  Eigen::Index rules = 2;
  std::uint64_t seed = 0;
  std::string model_path = "model.json";
  std::string report_path = "report.json";
  std::string initial_model_path;
  bool verbose = false;
};

void register_train(CLI::App& root, TrainCommand& c) {
  auto* app = root.add_subcommand("train", "Train a model on one split");
  app->fallthrough();
  add_data_flags(app, c.data, false);
  add_training_flags(app, c.training);
  app->add_option("--rules", c.rules, "Number of fuzzy rules")->check(CLI::Range(1, 1000))->capture_default_str();
  app->add_option("--mode", c.training.mode, "stepwise or backprop")
      ->check(CLI::IsMember({"stepwise", "backprop"}))
      ->capture_default_str();
  app->add_option("--seed", c.seed, "Seed for the split and the initial model")->capture_default_str();
  app->add_option("--out", c.model_path, "Model file to write")->capture_default_str();
  app->add_option("--report", c.report_path, "Training report to write")->capture_default_str();
  app->add_option("--initial-model,--initial_model", c.initial_model_path, "Also write the untrained starting model here");
  app->add_flag("--verbose", c.verbose, "Print one JSON progress line per epoch");
}

int run_train(const TrainCommand& c, std::ostream& out) {
  c.training.resolve(1e-3).validate();
  const auto protocol = chosen_protocol(c.data);
  const auto schema = chosen_schema(c.data);

  std::optional<PreparedSplit> split;
  Dataset train_data;
  if (protocol) {
    split = prepare_split(load_protocol_data(c.data.data, *protocol, schema), *protocol, c.seed);
    train_data = split->train;
  } else {
    const Dataset full = schema ? load_csv(c.data.data, *schema) : load_table(c.data.data, TableLayout::kLastColumnTarget);
    train_data = normalize(full);
    train_data.split = Split::kTrain;
  }

  TrainConfig cfg = c.training.resolve(protocol ? protocol_info(*protocol).default_eta0 : 1e-3);
  cfg.seed = c.seed;
  if (c.verbose) cfg.progress = &out;
  cfg.validate();

  const Modeld start = initial_model(train_data, c.rules, c.seed);
  if (!c.initial_model_path.empty()) save_model(start, c.initial_model_path, train_data.scaler);
  auto result = train(start, train_data, cfg);
  if (split) result.report.test_rmse = evaluate(result.model, *split, *protocol).rmse;

  save_model(result.model, c.model_path, train_data.scaler);
  auto doc = report_to_json(result.report);
  doc["rules"] = c.rules;
  doc["seed"] = c.seed;
  doc["eta0"] = cfg.eta0;
  doc["protocol"] = protocol ? nlohmann::json(c.data.protocol) : nlohmann::json(nullptr);
  doc["parameter_count"] = parameter_count(result.model);
  write_json(doc, c.report_path);

  out << to_string(cfg.mode) << " training: " << result.report.epochs_run << " epochs (best " << result.report.best_epoch
      << "), train RMSE " << short_number(result.report.train_rmse);
  if (result.report.test_rmse) out << ", test RMSE " << short_number(*result.report.test_rmse);
  out << '\n' << "model written to " << c.model_path << ", report to " << c.report_path << '\n';
  return kOk;
}

// ---------------------------------------------------------------- predict

struct PredictCommand {
  DataFlags data;
  std::string model_path;
  std::string out_path = "predictions.csv";
};

void register_predict(CLI::App& root, PredictCommand& c) {
  auto* app = root.add_subcommand("predict", "Predict with a saved model");
  app->fallthrough();
  app->add_option("--model", c.model_path, "Model file")->required();
  add_data_flags(app, c.data, false);
  app->add_option("--out", c.out_path, "Predictions CSV to write")->capture_default_str();
}

int run_predict(const PredictCommand& c, std::ostream& out) {
  const SavedModel saved = load_saved_model(c.model_path);
  const auto n = saved.model.input_dim;
  const auto protocol = chosen_protocol(c.data);
  const auto schema = chosen_schema(c.data);

  Dataset data;
  bool has_targets = true;
  if (protocol) {
    data = load_protocol_data(c.data.data, *protocol, schema);
  } else if (schema) {
    data = load_csv(c.data.data, *schema);
  } else {
    data = load_table(c.data.data, TableLayout::kAllFeatures);
    if (data.input_dim() == n + 1) {
      data.targets = data.inputs.col(n);
      data.inputs.conservativeResize(Eigen::NoChange, n);
    } else {
      has_targets = false;
    }
  }
  if (data.input_dim() != n)
    throw DataError(c.data.data + " has " + std::to_string(data.input_dim()) + " input columns, model expects " +
                    std::to_string(n));

  const Eigen::MatrixXd inputs = saved.scaler ? scale_inputs(data.inputs, *saved.scaler) : data.inputs;
  Eigen::VectorXd predictions = predict(saved.model, inputs);
  if (saved.scaler) predictions = denormalize(predictions, *saved.scaler);

  std::string csv = "index,prediction\n";
  for (Eigen::Index k = 0; k < predictions.size(); ++k) csv += std::to_string(k) + ',' + number(predictions[k]) + '\n';
  write_text(csv, c.out_path);
  out << "wrote " << predictions.size() << " predictions to " << c.out_path << '\n';
  if (has_targets) out << "RMSE against the file's targets: " << short_number(rmse(predictions, data.targets)) << '\n';
  return kOk;
}

// ---------------------------------------------------------------- benchmark

struct BenchmarkCommand {
  DataFlags data;
  TrainingFlags training;
  Eigen::Index rules = 2;
  std::size_t seeds = 10;
  std::string modes = "both";
  std::optional<std::size_t> threads;
  std::string results_path = "results.json";
  std::string table_path;
  std::string plot_path = "plot.csv";
  bool verbose = false;
};

void register_benchmark(CLI::App& root, BenchmarkCommand& c) {
  auto* app = root.add_subcommand("benchmark", "Multi-seed benchmark of both trainers");
  app->fallthrough();
  add_data_flags(app, c.data, true);
  add_training_flags(app, c.training);
  app->add_option("--rules", c.rules, "Number of fuzzy rules")->check(CLI::Range(1, 1000))->capture_default_str();
  app->add_option("--seeds", c.seeds, "Runs with seeds 0..N-1")->check(CLI::Range(1, 100000))->capture_default_str();
  app->add_option("--mode", c.modes, "stepwise, backprop or both")
      ->check(CLI::IsMember({"stepwise", "backprop", "both"}))
      ->capture_default_str();
  app->add_option("--threads", c.threads, "Parallel seeds [hardware threads, capped by TSKICFNN_THREADS]")
      ->check(CLI::Range(1, 4096));
  app->add_option("--results", c.results_path, "Results JSON to write")->capture_default_str();
  app->add_option("--table", c.table_path, "Also write the text table here");
  app->add_option("--plot", c.plot_path, "Plot CSV for price-series protocols")->capture_default_str();
  app->add_flag("--verbose", c.verbose, "Print per-seed results");
}

std::size_t thread_budget(const std::optional<std::size_t>& requested) {
  std::size_t threads = requested.value_or(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("TSKICFNN_THREADS"); env != nullptr && *env != '\0') {
    std::size_t cap = 0;
    const std::string_view text(env);
    const auto res = std::from_chars(text.data(), text.data() + text.size(), cap);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size() || cap == 0)
      throw ConfigurationError("TSKICFNN_THREADS must be a positive integer, got '" + std::string(text) + "'");
    threads = std::min(threads, cap);
  }
  return threads;
}

std::string plot_csv(const ExperimentResult& result) {
  const auto run = std::find_if(result.runs.begin(), result.runs.end(), [](const SeedRun& r) { return !r.failed; });
  std::string csv = "index,actual,predicted,error\n";
  if (run == result.runs.end()) return csv;
  for (Eigen::Index k = 0; k < result.actual.size(); ++k) {
    const double actual = result.actual[k];
    const double predicted = run->predicted[k];
    csv += std::to_string(k) + ',' + number(actual) + ',' + number(predicted) + ',' + number(actual - predicted) + '\n';
  }
  return csv;
}

int run_benchmark_command(const BenchmarkCommand& c, std::ostream& out) {
  const Protocol protocol = *chosen_protocol(c.data);
  const auto& info = protocol_info(protocol);
  c.training.resolve(info.default_eta0).validate();
  const std::size_t threads = thread_budget(c.threads);
  const Dataset full = load_protocol_data(c.data.data, protocol, chosen_schema(c.data));

  BenchmarkOptions options;
  options.protocol = protocol;
  options.rules = c.rules;
  options.n_seeds = c.seeds;
  options.eta0 = c.training.eta0;
  options.threads = threads;
  options.train = c.training.resolve(info.default_eta0);
  options.train.validate();

  std::vector<TrainMode> modes;
  if (c.modes != "backprop") modes.push_back(TrainMode::kStepwise);
  if (c.modes != "stepwise") modes.push_back(TrainMode::kBackprop);

  std::vector<ExperimentResult> results;
  std::size_t completed = 0;
  for (auto mode : modes) {
    options.train.mode = mode;
    results.push_back(run_benchmark(full, options));
    completed += results.back().runs.size() - results.back().failures;
  }

  nlohmann::json doc = {{"protocol", info.name},
                        {"instances", full.size()},
                        {"inputs", full.input_dim()},
                        {"rules", c.rules},
                        {"seeds", c.seeds},
                        {"results", nlohmann::json::array()}};
  for (const auto& r : results) doc["results"].push_back(experiment_to_json(r));
  write_json(doc, c.results_path);

  const std::string table = format_table(results);
  out << info.name << " (" << full.size() << " instances, RMSE in " << (info.time_series ? "price units" : "normalized units")
      << ")\n"
      << table;
  for (const auto& r : results) {
    if (r.failures > 0)
      out << method_label(r.mode) << ": " << r.failures << " of " << r.runs.size() << " seeds failed\n";
    if (c.verbose)
      for (const auto& s : r.runs)
        out << "  " << method_label(r.mode) << " seed " << s.seed << ": "
            << (s.failed ? s.failure : "test RMSE " + short_number(s.test_rmse) + ", " + std::to_string(s.epochs) + " epochs")
            << '\n';
  }
  if (!c.table_path.empty()) write_text(table, c.table_path);
  out << "results written to " << c.results_path << '\n';
  if (info.time_series) {
    write_text(plot_csv(results.front()), c.plot_path);
    out << "plot data written to " << c.plot_path << '\n';
  }
  return completed == 0 ? kTrainingAborted : kOk;
}

// ---------------------------------------------------------------- inspect

struct InspectCommand {
  std::string model_path;
  std::size_t top = 3;
};

void register_inspect(CLI::App& root, InspectCommand& c) {
  auto* app = root.add_subcommand("inspect", "Print the rules of a saved model");
  app->fallthrough();
  app->add_option("--model", c.model_path, "Model file")->required();
  app->add_option("--top", c.top, "Mixing entries shown per rule")->capture_default_str();
}

std::string hyperplane(const Eigen::VectorXd& a) {
  std::string s = "y = " + short_number(a[0]);
  for (Eigen::Index j = 1; j < a.size(); ++j) {
    s += a[j] < 0 ? " - " : " + ";
    s += short_number(std::abs(a[j])) + "·x" + std::to_string(j);
  }
  return s;
}

std::string vector_text(const Eigen::VectorXd& v) {
  std::string s = "(";
  for (Eigen::Index j = 0; j < v.size(); ++j) s += (j ? ", " : "") + short_number(v[j]);
  return s + ")";
}

int run_inspect(const InspectCommand& c, std::ostream& out) {
  const SavedModel saved = load_saved_model(c.model_path);
  const auto& m = saved.model;
  out << m.rule_count() << " rules, " << m.input_dim << " inputs, " << parameter_count(m) << " parameters\n";
  if (saved.scaler) out << "inputs and output are in min-max scaled units of the training data\n";
  for (Eigen::Index i = 0; i < m.rule_count(); ++i) {
    const auto& r = m.rules[static_cast<std::size_t>(i)];
    out << "\nrule " << i + 1 << '\n';
    out << "  center: " << vector_text(r.center) << '\n';
    out << "  shape regulator: " << short_number(r.shape_regulator) << '\n';
    out << "  then " << hyperplane(r.consequent) << '\n';

    struct Entry {
      Eigen::Index l, j;
      double v;
    };
    std::vector<Entry> mixing;
    for (Eigen::Index l = 0; l < m.input_dim; ++l)
      for (Eigen::Index j = 0; j < m.input_dim; ++j)
        if (l != j && r.transform(l, j) != 0.0) mixing.push_back({l, j, r.transform(l, j)});
    if (mixing.empty()) {
      const bool identity = r.transform.isIdentity(0.0);
      out << "  axis-aligned: " << (identity ? "identity transform" : "diagonal transform " + vector_text(r.transform.diagonal()))
          << ", no feature mixing\n";
      continue;
    }
    std::stable_sort(mixing.begin(), mixing.end(), [](const Entry& a, const Entry& b) { return std::abs(a.v) > std::abs(b.v); });
    out << "  strongest mixing:";
    for (std::size_t k = 0; k < std::min(c.top, mixing.size()); ++k)
      out << (k ? ", " : " ") << "gamma[" << mixing[k].l + 1 << ',' << mixing[k].j + 1 << "] = " << short_number(mixing[k].v);
    out << '\n';
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Correlation-aware TSK fuzzy network: stepwise training and a backprop baseline", "tskicfnn"};
  app.set_config("--config", "", "TOML-style file with [train], [predict], [benchmark] or [inspect] sections");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);

  TrainCommand train_cmd;
  PredictCommand predict_cmd;
  BenchmarkCommand benchmark_cmd;
  InspectCommand inspect_cmd;
  register_train(app, train_cmd);
  register_predict(app, predict_cmd);
  register_benchmark(app, benchmark_cmd);
  register_inspect(app, inspect_cmd);

  std::vector<std::string> argv_storage{"tskicfnn"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "train") return run_train(train_cmd, out);
    if (name == "predict") return run_predict(predict_cmd, out);
    if (name == "benchmark") return run_benchmark_command(benchmark_cmd, out);
    return run_inspect(inspect_cmd, out);
  } catch (const ConfigurationError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const TrainingAborted& e) {
    err << e.what() << '\n';
    return kTrainingAborted;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const FormatError& e) {
    err << "file error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
}

}  // namespace tskfnn::cli
