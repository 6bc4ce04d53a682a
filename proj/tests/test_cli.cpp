#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "tskfnn/cli.hpp"
#include "tskfnn/serialization.hpp"

using namespace tskfnn;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

// Fresh scratch directory per test case.
struct Workdir {
  fs::path dir;
  explicit Workdir(const std::string& name) : dir(fs::temp_directory_path() / ("tskicfnn_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Workdir() { fs::remove_all(dir); }
  std::string path(const std::string& file) const { return (dir / file).string(); }
  std::string write(const std::string& file, const std::string& text) const {
    std::ofstream(dir / file) << text;
    return path(file);
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::string line_csv(int rows) {
  std::string csv = "x,y\n";
  for (int k = 0; k < rows; ++k) {
    const double x = -1.0 + 2.0 * k / (rows - 1);
    csv += std::to_string(x) + ',' + std::to_string(2.0 * x + 1.0) + '\n';
  }
  return csv;
}

std::size_t count_lines(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

}  // namespace

TEST_CASE("cli: help exits 0 and parse errors exit 2") {
  CHECK(run_cli({"--help"}).code == cli::kOk);
  CHECK(run_cli({}).code == cli::kConfigError);
  CHECK(run_cli({"train"}).code == cli::kConfigError);  // --data missing
  CHECK(run_cli({"train", "--data", "x.csv", "--rules", "0"}).code == cli::kConfigError);
  CHECK(run_cli({"train", "--data", "x.csv", "--protocol", "iris"}).code == cli::kConfigError);
  CHECK(run_cli({"train", "--data", "x.csv", "--alpha", "1.5"}).code == cli::kConfigError);
}

TEST_CASE("cli: missing data file exits 3") {
  const auto r = run_cli({"train", "--data", "/nonexistent/file.csv"});
  CHECK(r.code == cli::kDataError);
  CHECK(r.err.find("data error") != std::string::npos);
}

TEST_CASE("cli: train then predict on a linear table") {
  Workdir w("linear");
  const auto data = w.write("line.csv", line_csv(120));
  const auto r = run_cli({"train", "--data", data, "--rules", "1", "--iter-max", "400", "--out", w.path("m.json"),
                          "--report", w.path("r.json")});
  REQUIRE(r.code == cli::kOk);
  CHECK(r.out.find("stepwise training:") != std::string::npos);

  const auto report = nlohmann::json::parse(slurp(w.path("r.json")));
  CHECK(report["rules"] == 1);
  CHECK(report["parameter_count"] == 5);
  CHECK(report["protocol"].is_null());

  const auto p = run_cli({"predict", "--model", w.path("m.json"), "--data", data, "--out", w.path("p.csv")});
  REQUIRE(p.code == cli::kOk);
  const std::string pred = slurp(w.path("p.csv"));
  CHECK(pred.rfind("index,prediction\n", 0) == 0);
  CHECK(count_lines(pred) == 121);

  // Predictions come back in the original units of y.
  std::istringstream rows(pred);
  std::string line;
  std::getline(rows, line);
  std::getline(rows, line);
  CHECK(std::stod(line.substr(line.find(',') + 1)) == doctest::Approx(-1.0).epsilon(0.02));
}

TEST_CASE("cli: predict rejects a column count that fits neither n nor n+1") {
  Workdir w("mismatch");
  const auto data = w.write("line.csv", line_csv(20));
  REQUIRE(run_cli({"train", "--data", data, "--rules", "1", "--iter-max", "2", "--out", w.path("m.json"), "--report",
                   w.path("r.json")})
              .code == cli::kOk);
  const auto wide = w.write("wide.csv", "1,2,3\n4,5,6\n");
  const auto r = run_cli({"predict", "--model", w.path("m.json"), "--data", wide, "--out", w.path("p.csv")});
  CHECK(r.code == cli::kDataError);
  CHECK(r.err.find("model expects 1") != std::string::npos);

  // n columns: no targets, so no RMSE line.
  const auto bare = w.write("bare.csv", "0.5\n-0.5\n");
  const auto ok = run_cli({"predict", "--model", w.path("m.json"), "--data", bare, "--out", w.path("p.csv")});
  CHECK(ok.code == cli::kOk);
  CHECK(ok.out.find("RMSE") == std::string::npos);
  CHECK(count_lines(slurp(w.path("p.csv"))) == 3);
}

TEST_CASE("cli: config file values apply and flags override them") {
  Workdir w("config");
  const auto data = w.write("line.csv", line_csv(30));
  const auto cfg = w.write("run.toml", "[train]\nrules = 3\nseed = 4\niter_max = 2\nstop-scale = \"mean\"\n");
  const auto r = run_cli({"train", "--config", cfg, "--data", data, "--rules", "1", "--out", w.path("m.json"), "--report",
                          w.path("r.json")});
  REQUIRE(r.code == cli::kOk);
  const auto report = nlohmann::json::parse(slurp(w.path("r.json")));
  CHECK(report["rules"] == 1);
  CHECK(report["seed"] == 4);
  CHECK(report["epochs_run"].get<int>() <= 2);

  const auto bad = w.write("bad.toml", "[train]\nlearning_rate = 0.1\n");
  CHECK(run_cli({"train", "--config", bad, "--data", data}).code == cli::kConfigError);
}

TEST_CASE("cli: non-finite data aborts training with exit 4") {
  Workdir w("nan");
  const auto data = w.write("nan.csv", "x,y\n0,1\nnan,2\n1,3\n");
  const auto r = run_cli({"train", "--data", data, "--out", w.path("m.json"), "--report", w.path("r.json")});
  CHECK(r.code == cli::kTrainingAborted);
}

TEST_CASE("cli: identical runs write byte-identical files") {
  Workdir w("determinism");
  const auto data = w.write("line.csv", line_csv(40));
  for (const char* tag : {"a", "b"}) {
    REQUIRE(run_cli({"train", "--data", data, "--rules", "2", "--iter-max", "5", "--seed", "9", "--out",
                     w.path(std::string("m_") + tag + ".json"), "--report", w.path(std::string("r_") + tag + ".json"),
                     "--initial-model", w.path(std::string("i_") + tag + ".json")})
                .code == cli::kOk);
  }
  CHECK(slurp(w.path("m_a.json")) == slurp(w.path("m_b.json")));
  CHECK(slurp(w.path("r_a.json")) == slurp(w.path("r_b.json")));

  // The backprop baseline starts from the same model for the same seed.
  REQUIRE(run_cli({"train", "--data", data, "--rules", "2", "--iter-max", "1", "--seed", "9", "--mode", "backprop",
                   "--out", w.path("bp.json"), "--report", w.path("bp_r.json"), "--initial-model", w.path("bp_i.json")})
              .code == cli::kOk);
  CHECK(slurp(w.path("bp_i.json")) == slurp(w.path("i_a.json")));
}

TEST_CASE("cli: inspect reports hyperplanes and mixing") {
  Workdir w("inspect");
  Modeld m;
  m.input_dim = 2;
  Eigen::VectorXd a(3);
  a << 1.0, 2.0, -0.5;
  m.rules.push_back({Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2), 1.0, a});
  Eigen::MatrixXd mixed = Eigen::MatrixXd::Identity(2, 2);
  mixed(1, 0) = -0.7;
  mixed(0, 1) = 0.2;
  m.rules.push_back({Eigen::VectorXd::Ones(2), mixed, 2.0, Eigen::VectorXd::Zero(3)});
  save_model(m, w.path("m.json"));

  const auto r = run_cli({"inspect", "--model", w.path("m.json"), "--top", "1"});
  REQUIRE(r.code == cli::kOk);
  CHECK(r.out.find("2 rules, 2 inputs, 20 parameters") != std::string::npos);
  CHECK(r.out.find("then y = 1 + 2·x1 - 0.5·x2") != std::string::npos);
  CHECK(r.out.find("axis-aligned: identity transform") != std::string::npos);
  CHECK(r.out.find("strongest mixing: gamma[2,1] = -0.7\n") != std::string::npos);
  CHECK(r.out.find("scaled units") == std::string::npos);
}

TEST_CASE("cli: invalid thread cap is a configuration error") {
  const std::string data = std::string(TSKFNN_DATA_DIR) + "/autompg.csv";
  setenv("TSKICFNN_THREADS", "zero", 1);
  const auto r = run_cli({"benchmark", "--protocol", "auto_mpg_case1", "--data", data, "--seeds", "1"});
  unsetenv("TSKICFNN_THREADS");
  CHECK(r.code == cli::kConfigError);
  CHECK(r.err.find("TSKICFNN_THREADS") != std::string::npos);
}

TEST_CASE("cli: price-series benchmark writes the plot table") {
  Workdir w("plot");
  std::string prices = "Date,Open,High,Low,Close,Adj Close,Volume\n";
  for (int k = 0; k < 60; ++k) {
    const std::string close = std::to_string(100.0 + k + (k % 3));
    prices += std::to_string(k) + ",1,1,1," + close + ',' + close + ",0\n";
  }
  const auto data = w.write("goog.csv", prices);
  const auto r = run_cli({"benchmark", "--protocol", "google_stock", "--data", data, "--seeds", "1", "--iter-max", "3",
                          "--threads", "1", "--results", w.path("res.json"), "--plot", w.path("plot.csv")});
  REQUIRE(r.code == cli::kOk);
  const std::string plot = slurp(w.path("plot.csv"));
  CHECK(plot.rfind("index,actual,predicted,error\n", 0) == 0);
  const auto res = nlohmann::json::parse(slurp(w.path("res.json")));
  CHECK(res["results"].size() == 2);
  CHECK(r.out.find("price units") != std::string::npos);
}
