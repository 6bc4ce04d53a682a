#pragma once

// Model files: {version, input_dim, rules:[{center, transform, shape_regulator,
// consequent}]} with `transform` flattened row-major, plus an optional
// `scaler` {input_offset, input_scale, target_offset, target_scale} recording
// the min-max map the model was trained under.  Doubles are written in
// shortest round-trip form so a save/load cycle is value-exact.

#include <filesystem>
#include <optional>
#include <stdexcept>

#include "json.hpp"

#include "tskfnn/dataset.hpp"
#include "tskfnn/model.hpp"
#include "tskfnn/trainer.hpp"

namespace tskfnn {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kModelFormatVersion = 1;

nlohmann::json model_to_json(const Modeld& model);
Modeld model_from_json(const nlohmann::json& doc);

nlohmann::json scaler_to_json(const Scaler& scaler);
Scaler scaler_from_json(const nlohmann::json& doc, Eigen::Index input_dim);

/// A model together with the scaling of the data it was trained on.
struct SavedModel {
  Modeld model;
  std::optional<Scaler> scaler;
};

void save_model(const Modeld& model, const std::filesystem::path& path,
                const std::optional<Scaler>& scaler = std::nullopt);
SavedModel load_saved_model(const std::filesystem::path& path);
Modeld load_model(const std::filesystem::path& path);

/// Wall time is left out unless asked for so that reruns are byte-identical.
nlohmann::json report_to_json(const TrainReport& report, bool include_timing = false);

/// Writes `doc` followed by a newline.
void write_json(const nlohmann::json& doc, const std::filesystem::path& path);

}  // namespace tskfnn
