#pragma once

// Benchmark data: CSV loading under a column schema, min-max scaling fit on
// the training split, lag windows for price series, and the fixed split
// protocols of the seven benchmark tasks.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace tskfnn {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Split { kTrain, kTest, kAll };

std::string_view to_string(Split split);

/// Per-column affine map x' = (x - offset) / scale and its inverse.
struct Scaler {
  Eigen::VectorXd input_offset;
  Eigen::VectorXd input_scale;
  double target_offset = 0.0;
  double target_scale = 1.0;
};

struct Dataset {
  std::string name;
  Eigen::MatrixXd inputs;   // N x n
  Eigen::VectorXd targets;  // N
  Split split = Split::kAll;
  std::optional<Scaler> scaler;  // set once normalized
  std::vector<std::size_t> source_index;  // original row (or time step) of each instance
  std::size_t dropped_rows = 0;

  Eigen::Index size() const { return inputs.rows(); }
  Eigen::Index input_dim() const { return inputs.cols(); }
};

enum class ColumnRole { kFeature, kTarget, kIgnore };

struct ColumnSpec {
  std::string name;
  ColumnRole role = ColumnRole::kFeature;
  /// Non-empty for categorical features; a value maps to its index here.
  std::vector<std::string> categories;
};

struct CsvSchema {
  std::vector<ColumnSpec> columns;
  std::string missing_token = "?";
  bool header = false;
  char delimiter = ',';
};

/// Parses {columns:[{name, role, categories?}], missing_token, header?, delimiter?}.
CsvSchema parse_schema(std::string_view json_text);
CsvSchema load_schema(const std::filesystem::path& path);

/// Splits one CSV record (RFC 4180 quoting).
std::vector<std::string> split_csv_record(std::string_view line, char delimiter = ',');

/// Loads a file under `schema`.  Rows with a missing attribute are dropped and
/// counted; any other unparseable field is an error naming its line.
Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);

enum class TableLayout { kLastColumnTarget, kAllFeatures };

/// Plain numeric CSV without a schema file.  A first line that does not parse
/// as numbers is taken as a header.  With kAllFeatures the targets are zero.
Dataset load_table(const std::filesystem::path& path, TableLayout layout);

struct WindowSpec {
  std::size_t lag = 3;
  std::size_t horizon = 1;
};

/// Row k: inputs (s_k..s_{k+lag-1}) -> target s_{k+lag}.
Dataset windowize(const Eigen::VectorXd& series, const WindowSpec& spec);

enum class Protocol {
  kAutoMpgCase1,
  kAutoMpgCase2,
  kAbalone,
  kCaliforniaCase1,
  kCaliforniaCase2,
  kGoogleStock,
  kSydneyStock,
};

struct ProtocolInfo {
  Protocol protocol;
  std::string_view name;
  std::size_t expected_instances;  // 0 when it follows from the file
  std::size_t train_size;          // 0 when train is every instance
  std::size_t test_size;           // 0 when the rest of the data
  bool shuffled;
  bool time_series;
  std::size_t lag;                 // window length for time series
  double default_eta0;
};

const ProtocolInfo& protocol_info(Protocol protocol);
std::optional<Protocol> parse_protocol(std::string_view name);
const std::vector<Protocol>& all_protocols();

/// Default column layout of the canonical file for each protocol.
CsvSchema builtin_schema(Protocol protocol);

/// Loads the protocol's file; price series are windowed with the protocol lag.
Dataset load_protocol_data(const std::filesystem::path& path, Protocol protocol,
                           const std::optional<CsvSchema>& schema = std::nullopt);

/// Train/test partition.  Random protocols shuffle with `seed`; price series
/// are split chronologically.
std::pair<Dataset, Dataset> split(const Dataset& data, Protocol protocol, std::uint64_t seed);

/// Min-max scaler on inputs and targets; constant columns get scale 1.
Scaler fit_scaler(const Dataset& data);
Dataset normalize(const Dataset& data, const Scaler& scaler);
Dataset normalize(const Dataset& data);
Eigen::VectorXd denormalize(const Eigen::VectorXd& predictions, const Scaler& scaler);
Eigen::MatrixXd scale_inputs(const Eigen::MatrixXd& inputs, const Scaler& scaler);

}  // namespace tskfnn
