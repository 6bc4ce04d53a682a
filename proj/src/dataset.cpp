#include "tskfnn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "tskfnn/random.hpp"

namespace tskfnn {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

ColumnRole parse_role(const std::string& role) {
  if (role == "feature") return ColumnRole::kFeature;
  if (role == "target") return ColumnRole::kTarget;
  if (role == "ignore") return ColumnRole::kIgnore;
  throw DataError("schema: unknown column role '" + role + "'");
}

Dataset select_rows(const Dataset& data, const std::vector<std::size_t>& rows, Split split) {
  Dataset out;
  out.name = data.name;
  out.split = split;
  out.scaler = data.scaler;
  out.dropped_rows = data.dropped_rows;
  out.inputs.resize(static_cast<Eigen::Index>(rows.size()), data.inputs.cols());
  out.targets.resize(static_cast<Eigen::Index>(rows.size()));
  out.source_index.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto src = static_cast<Eigen::Index>(rows[k]);
    out.inputs.row(static_cast<Eigen::Index>(k)) = data.inputs.row(src);
    out.targets[static_cast<Eigen::Index>(k)] = data.targets[src];
    out.source_index.push_back(data.source_index.empty() ? rows[k] : data.source_index[rows[k]]);
  }
  return out;
}

CsvSchema numeric_schema(std::initializer_list<std::pair<const char*, ColumnRole>> cols, bool header,
                         std::string missing) {
  CsvSchema s;
  s.header = header;
  s.missing_token = std::move(missing);
  for (const auto& [name, role] : cols) s.columns.push_back({name, role, {}});
  return s;
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kTest: return "test";
    case Split::kAll: return "all";
  }
  return "all";
}

CsvSchema parse_schema(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("schema: ") + e.what());
  }
  CsvSchema schema;
  try {
    for (const auto& col : doc.at("columns")) {
      ColumnSpec spec;
      spec.name = col.at("name").get<std::string>();
      spec.role = parse_role(col.at("role").get<std::string>());
      if (col.contains("categories")) spec.categories = col.at("categories").get<std::vector<std::string>>();
      schema.columns.push_back(std::move(spec));
    }
    schema.missing_token = doc.value("missing_token", std::string("?"));
    schema.header = doc.value("header", false);
    const auto delim = doc.value("delimiter", std::string(","));
    if (delim.size() != 1) throw DataError("schema: delimiter must be one character");
    schema.delimiter = delim[0];
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("schema: ") + e.what());
  }
  const auto targets = std::count_if(schema.columns.begin(), schema.columns.end(),
                                     [](const ColumnSpec& c) { return c.role == ColumnRole::kTarget; });
  if (targets != 1) throw DataError("schema: exactly one target column required");
  return schema;
}

CsvSchema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open schema " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_schema(buf.str());
}

std::vector<std::string> split_csv_record(std::string_view line, char delimiter) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delimiter) {
      fields.push_back(std::move(current));
      current.clear();
    } else if (c != '\r') {
      current.push_back(c);
    }
  }
  if (quoted) throw DataError("unterminated quoted field");
  fields.push_back(std::move(current));
  return fields;
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());

  const auto n_features = std::count_if(schema.columns.begin(), schema.columns.end(),
                                        [](const ColumnSpec& c) { return c.role == ColumnRole::kFeature; });
  std::vector<double> values;
  std::vector<double> targets;
  Dataset out;
  out.name = path.stem().string();

  std::string line;
  std::size_t line_no = 0;
  bool header_pending = schema.header;
  std::size_t record = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    const auto where = path.string() + ":" + std::to_string(line_no) + ": ";
    std::vector<std::string> fields;
    try {
      fields = split_csv_record(line, schema.delimiter);
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
    if (fields.size() != schema.columns.size())
      throw DataError(where + "expected " + std::to_string(schema.columns.size()) + " fields, found " +
                      std::to_string(fields.size()));

    std::vector<double> row;
    row.reserve(static_cast<std::size_t>(n_features));
    double target = 0.0;
    bool missing = false;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const auto& spec = schema.columns[c];
      if (spec.role == ColumnRole::kIgnore) continue;
      const auto field = trim(fields[c]);
      if (field.empty() || field == schema.missing_token) {
        missing = true;
        continue;
      }
      double v = 0.0;
      if (!spec.categories.empty()) {
        const auto it = std::find(spec.categories.begin(), spec.categories.end(), field);
        if (it == spec.categories.end())
          throw DataError(where + "unknown category '" + std::string(field) + "' in column '" + spec.name + "'");
        v = static_cast<double>(it - spec.categories.begin());
      } else {
        const auto parsed = parse_double(field);
        if (!parsed)
          throw DataError(where + "cannot parse '" + std::string(field) + "' in column '" + spec.name + "'");
        v = *parsed;
      }
      if (spec.role == ColumnRole::kTarget)
        target = v;
      else
        row.push_back(v);
    }
    if (missing) {
      ++out.dropped_rows;
      ++record;
      continue;
    }
    values.insert(values.end(), row.begin(), row.end());
    targets.push_back(target);
    out.source_index.push_back(record++);
  }
  if (targets.empty()) throw DataError(path.string() + ": no usable rows");

  const auto n_rows = static_cast<Eigen::Index>(targets.size());
  out.inputs = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), n_rows, static_cast<Eigen::Index>(n_features));
  out.targets = Eigen::Map<const Eigen::VectorXd>(targets.data(), n_rows);
  return out;
}

Dataset load_table(const std::filesystem::path& path, TableLayout layout) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  while (std::getline(in, line) && trim(line).empty()) {
  }
  if (trim(line).empty()) throw DataError(path.string() + ": no usable rows");
  std::vector<std::string> first;
  try {
    first = split_csv_record(line);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  CsvSchema schema;
  schema.header = std::any_of(first.begin(), first.end(), [](const std::string& f) {
    const auto t = trim(f);
    return !t.empty() && t != "?" && !parse_double(t);
  });
  if (layout == TableLayout::kLastColumnTarget && first.size() < 2)
    throw DataError(path.string() + ": need at least one feature column and a target column");
  for (std::size_t c = 0; c < first.size(); ++c) {
    ColumnSpec col;
    col.name = schema.header ? std::string(trim(first[c])) : "c" + std::to_string(c + 1);
    if (layout == TableLayout::kLastColumnTarget && c + 1 == first.size()) col.role = ColumnRole::kTarget;
    schema.columns.push_back(std::move(col));
  }
  return load_csv(path, schema);
}

Dataset windowize(const Eigen::VectorXd& series, const WindowSpec& spec) {
  if (spec.lag == 0) throw DataError("window lag must be positive");
  if (spec.horizon != 1) throw DataError("only one-step-ahead windows are supported");
  const auto total = static_cast<std::size_t>(series.size());
  if (total <= spec.lag)
    throw DataError("series of length " + std::to_string(total) + " is too short for lag " +
                    std::to_string(spec.lag));
  const auto lag = static_cast<Eigen::Index>(spec.lag);
  const auto rows = series.size() - lag;
  Dataset out;
  out.inputs.resize(rows, lag);
  out.targets.resize(rows);
  for (Eigen::Index k = 0; k < rows; ++k) {
    out.inputs.row(k) = series.segment(k, lag).transpose();
    out.targets[k] = series[k + lag];
    out.source_index.push_back(static_cast<std::size_t>(k + lag));
  }
  return out;
}

const std::vector<Protocol>& all_protocols() {
  static const std::vector<Protocol> all = {Protocol::kAutoMpgCase1,    Protocol::kAutoMpgCase2,
                                            Protocol::kAbalone,         Protocol::kCaliforniaCase1,
                                            Protocol::kCaliforniaCase2, Protocol::kGoogleStock,
                                            Protocol::kSydneyStock};
  return all;
}

const ProtocolInfo& protocol_info(Protocol protocol) {
  static const ProtocolInfo table[] = {
      {Protocol::kAutoMpgCase1, "auto_mpg_case1", 392, 320, 72, true, false, 0, 1e-3},
      {Protocol::kAutoMpgCase2, "auto_mpg_case2", 392, 196, 196, true, false, 0, 1e-3},
      {Protocol::kAbalone, "abalone", 4177, 3000, 1177, true, false, 0, 1e-4},
      {Protocol::kCaliforniaCase1, "california_case1", 20640, 8000, 12640, true, false, 0, 1e-4},
      {Protocol::kCaliforniaCase2, "california_case2", 20640, 10320, 10320, true, false, 0, 1e-4},
      {Protocol::kGoogleStock, "google_stock", 0, 0, 0, false, true, 3, 1e-3},
      {Protocol::kSydneyStock, "sydney_stock", 0, 1260, 0, false, true, 4, 1e-3},
  };
  return table[static_cast<std::size_t>(protocol)];
}

std::optional<Protocol> parse_protocol(std::string_view name) {
  for (const auto p : all_protocols())
    if (protocol_info(p).name == name) return p;
  return std::nullopt;
}

CsvSchema builtin_schema(Protocol protocol) {
  constexpr auto F = ColumnRole::kFeature;
  constexpr auto T = ColumnRole::kTarget;
  constexpr auto I = ColumnRole::kIgnore;
  switch (protocol) {
    case Protocol::kAutoMpgCase1:
    case Protocol::kAutoMpgCase2:
      return numeric_schema({{"mpg", T},
                             {"cylinders", F},
                             {"displacement", F},
                             {"horsepower", F},
                             {"weight", F},
                             {"acceleration", F},
                             {"model_year", F},
                             {"origin", I},
                             {"car_name", I}},
                            true, "?");
    case Protocol::kAbalone: {
      auto s = numeric_schema({{"sex", F},
                               {"length", F},
                               {"diameter", F},
                               {"height", F},
                               {"whole_weight", F},
                               {"shucked_weight", F},
                               {"viscera_weight", F},
                               {"shell_weight", F},
                               {"rings", T}},
                              false, "?");
      s.columns[0].categories = {"M", "F", "I"};
      return s;
    }
    case Protocol::kCaliforniaCase1:
    case Protocol::kCaliforniaCase2:
      return numeric_schema({{"longitude", F},
                             {"latitude", F},
                             {"housing_median_age", F},
                             {"total_rooms", F},
                             {"total_bedrooms", F},
                             {"population", F},
                             {"households", F},
                             {"median_income", F},
                             {"median_house_value", T}},
                            false, "?");
    case Protocol::kGoogleStock:
    case Protocol::kSydneyStock:
      return numeric_schema(
          {{"Date", I}, {"Open", I}, {"High", I}, {"Low", I}, {"Close", T}, {"Adj Close", I}, {"Volume", I}}, true,
          "null");
  }
  throw DataError("unknown protocol");
}

Dataset load_protocol_data(const std::filesystem::path& path, Protocol protocol,
                           const std::optional<CsvSchema>& schema) {
  const auto& info = protocol_info(protocol);
  Dataset raw = load_csv(path, schema ? *schema : builtin_schema(protocol));
  if (!info.time_series) {
    raw.name = std::string(info.name);
    return raw;
  }
  Dataset windows = windowize(raw.targets, WindowSpec{info.lag, 1});
  windows.name = std::string(info.name);
  windows.dropped_rows = raw.dropped_rows;
  return windows;
}

std::pair<Dataset, Dataset> split(const Dataset& data, Protocol protocol, std::uint64_t seed) {
  const auto& info = protocol_info(protocol);
  const auto total = static_cast<std::size_t>(data.size());
  if (info.expected_instances != 0 && total != info.expected_instances)
    throw DataError(std::string(info.name) + ": expected " + std::to_string(info.expected_instances) +
                    " instances, found " + std::to_string(total));

  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});

  if (info.train_size == 0) {
    if (total == 0) throw DataError(std::string(info.name) + ": empty dataset");
    return {select_rows(data, order, Split::kTrain), select_rows(data, order, Split::kTest)};
  }
  if (total <= info.train_size)
    throw DataError(std::string(info.name) + ": needs more than " + std::to_string(info.train_size) +
                    " instances, found " + std::to_string(total));

  if (info.shuffled) {
    Rng rng(seed, RngStream::kSplit);
    for (std::size_t i = total - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
  }
  const std::size_t test_size = info.test_size != 0 ? info.test_size : total - info.train_size;
  if (info.train_size + test_size != total)
    throw DataError(std::string(info.name) + ": split sizes do not cover the data");
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(info.train_size));
  std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(info.train_size), order.end());
  return {select_rows(data, train, Split::kTrain), select_rows(data, test, Split::kTest)};
}

Scaler fit_scaler(const Dataset& data) {
  if (data.size() == 0) throw DataError("cannot fit a scaler on an empty dataset");
  Scaler s;
  s.input_offset = data.inputs.colwise().minCoeff().transpose();
  s.input_scale = data.inputs.colwise().maxCoeff().transpose() - s.input_offset;
  for (auto& v : s.input_scale)
    if (v == 0.0) v = 1.0;
  s.target_offset = data.targets.minCoeff();
  s.target_scale = data.targets.maxCoeff() - s.target_offset;
  if (s.target_scale == 0.0) s.target_scale = 1.0;
  return s;
}

Eigen::MatrixXd scale_inputs(const Eigen::MatrixXd& inputs, const Scaler& scaler) {
  if (inputs.cols() != scaler.input_offset.size()) throw DataError("scaler dimension mismatch");
  return (inputs.rowwise() - scaler.input_offset.transpose()).array().rowwise() /
         scaler.input_scale.transpose().array();
}

Dataset normalize(const Dataset& data, const Scaler& scaler) {
  Dataset out = data;
  out.inputs = scale_inputs(data.inputs, scaler);
  out.targets = (data.targets.array() - scaler.target_offset) / scaler.target_scale;
  out.scaler = scaler;
  return out;
}

Dataset normalize(const Dataset& data) { return normalize(data, fit_scaler(data)); }

Eigen::VectorXd denormalize(const Eigen::VectorXd& predictions, const Scaler& scaler) {
  return (predictions.array() * scaler.target_scale + scaler.target_offset).matrix();
}

}  // namespace tskfnn
