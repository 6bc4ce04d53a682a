#include "tskfnn/serialization.hpp"

#include <cmath>
#include <fstream>

namespace tskfnn {

namespace {

nlohmann::json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.begin(), v.end()); }

Eigen::VectorXd read_vector(const nlohmann::json& j, Eigen::Index expected, const char* field) {
  if (!j.is_array()) throw FormatError(std::string(field) + " must be an array");
  if (static_cast<Eigen::Index>(j.size()) != expected)
    throw FormatError(std::string(field) + " has " + std::to_string(j.size()) + " entries, expected " +
                      std::to_string(expected));
  Eigen::VectorXd v(expected);
  for (Eigen::Index k = 0; k < expected; ++k) {
    const auto& e = j[static_cast<std::size_t>(k)];
    if (!e.is_number()) throw FormatError(std::string(field) + " must contain numbers");
    v[k] = e.get<double>();
  }
  return v;
}

nlohmann::json nullable(double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); }

}  // namespace

nlohmann::json model_to_json(const Modeld& model) {
  nlohmann::json rules = nlohmann::json::array();
  for (const auto& r : model.rules) {
    std::vector<double> transform;
    transform.reserve(static_cast<std::size_t>(r.transform.size()));
    for (Eigen::Index l = 0; l < r.transform.rows(); ++l)
      for (Eigen::Index j = 0; j < r.transform.cols(); ++j) transform.push_back(r.transform(l, j));
    rules.push_back({{"center", vector_json(r.center)},
                     {"transform", transform},
                     {"shape_regulator", r.shape_regulator},
                     {"consequent", vector_json(r.consequent)}});
  }
  return {{"version", kModelFormatVersion}, {"input_dim", model.input_dim}, {"rules", rules}};
}

Modeld model_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("version").get<int>() != kModelFormatVersion)
      throw FormatError("unsupported model version " + doc.at("version").dump());
    Modeld model;
    model.input_dim = doc.at("input_dim").get<Eigen::Index>();
    if (model.input_dim < 1) throw FormatError("input_dim must be positive");
    const auto n = model.input_dim;
    for (const auto& jr : doc.at("rules")) {
      RuleParamsd rule;
      rule.center = read_vector(jr.at("center"), n, "center");
      const Eigen::VectorXd flat = read_vector(jr.at("transform"), n * n, "transform");
      rule.transform = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          flat.data(), n, n);
      rule.shape_regulator = jr.at("shape_regulator").get<double>();
      rule.consequent = read_vector(jr.at("consequent"), n + 1, "consequent");
      model.rules.push_back(std::move(rule));
    }
    model.validate();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed model: ") + e.what());
  } catch (const ConfigurationError& e) {
    throw FormatError(std::string("invalid model: ") + e.what());
  }
}

void write_json(const nlohmann::json& doc, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw FormatError("failed writing " + path.string());
}

nlohmann::json scaler_to_json(const Scaler& scaler) {
  return {{"input_offset", vector_json(scaler.input_offset)},
          {"input_scale", vector_json(scaler.input_scale)},
          {"target_offset", scaler.target_offset},
          {"target_scale", scaler.target_scale}};
}

Scaler scaler_from_json(const nlohmann::json& doc, Eigen::Index input_dim) {
  try {
    Scaler s;
    s.input_offset = read_vector(doc.at("input_offset"), input_dim, "input_offset");
    s.input_scale = read_vector(doc.at("input_scale"), input_dim, "input_scale");
    s.target_offset = doc.at("target_offset").get<double>();
    s.target_scale = doc.at("target_scale").get<double>();
    if (!(s.input_scale.array() != 0.0).all() || s.target_scale == 0.0)
      throw FormatError("scaler has a zero scale");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed scaler: ") + e.what());
  }
}

void save_model(const Modeld& model, const std::filesystem::path& path, const std::optional<Scaler>& scaler) {
  auto doc = model_to_json(model);
  if (scaler) doc["scaler"] = scaler_to_json(*scaler);
  write_json(doc, path);
}

SavedModel load_saved_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open model " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  SavedModel out{model_from_json(doc), std::nullopt};
  if (doc.contains("scaler")) out.scaler = scaler_from_json(doc["scaler"], out.model.input_dim);
  return out;
}

Modeld load_model(const std::filesystem::path& path) { return load_saved_model(path).model; }

nlohmann::json report_to_json(const TrainReport& report, bool include_timing) {
  nlohmann::json j2 = nlohmann::json::array();
  for (double v : report.j2_history) j2.push_back(nullable(v));
  nlohmann::json doc = {{"mode", std::string(to_string(report.mode))},
                        {"epochs_run", report.epochs_run},
                        {"best_epoch", report.best_epoch},
                        {"train_rmse", report.train_rmse},
                        {"test_rmse", report.test_rmse ? nlohmann::json(*report.test_rmse) : nlohmann::json(nullptr)},
                        {"degenerate_instances", report.degenerate_instances},
                        {"clamped_gradients", report.clamped_gradients},
                        {"j1_history", report.j1_history},
                        {"j2_history", j2},
                        {"j3_history", report.j3_history},
                        {"rmse_history", report.rmse_history},
                        {"premise_steps", report.premise_steps},
                        {"consequent_steps", report.consequent_steps}};
  if (include_timing) doc["wall_seconds"] = report.wall_seconds;
  return doc;
}

}  // namespace tskfnn
