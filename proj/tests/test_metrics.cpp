#include "doctest.h"

#include <numeric>

#include "support.hpp"
#include "tskfnn/metrics.hpp"

using namespace tskfnn;

namespace {

Dataset synthetic_mpg() {
  Dataset d;
  d.name = "synthetic";
  d.inputs = testing::uniform_matrix(392, 3, 31, 0.0, 10.0);
  d.targets = d.inputs.col(0) * 0.5 + d.inputs.col(1).array().sqrt().matrix() - 0.1 * d.inputs.col(2);
  for (Eigen::Index k = 0; k < d.size(); ++k) d.source_index.push_back(static_cast<std::size_t>(k));
  return d;
}

BenchmarkOptions quick(TrainMode mode) {
  BenchmarkOptions o;
  o.protocol = Protocol::kAutoMpgCase1;
  o.rules = 2;
  o.n_seeds = 3;
  o.train.mode = mode;
  o.train.iter_max = 5;
  return o;
}

}  // namespace

TEST_CASE("rmse values") {
  CHECK(rmse(Eigen::Vector2d(1, 2), Eigen::Vector2d(1, 2)) == 0.0);
  CHECK(rmse(Eigen::Vector2d(0, 0), Eigen::Vector2d(3, 4)) == doctest::Approx(std::sqrt(12.5)));
  CHECK(rmse(Eigen::VectorXd::Constant(1, 2.5), Eigen::VectorXd::Constant(1, -1.0)) == doctest::Approx(3.5));
  CHECK_THROWS_AS(rmse(Eigen::Vector2d(0, 0), Eigen::Vector3d(0, 0, 0)), std::invalid_argument);
  CHECK_THROWS_AS(rmse(Eigen::VectorXd(), Eigen::VectorXd()), std::invalid_argument);
}

TEST_CASE("rmse is permutation invariant and affine equivariant") {
  const auto p = testing::uniform_vector(64, 1);
  const auto t = testing::uniform_vector(64, 2);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(64);
  perm.setIdentity();
  std::reverse(perm.indices().data(), perm.indices().data() + 64);
  CHECK(rmse(perm * p, perm * t) == doctest::Approx(rmse(p, t)).epsilon(1e-14));
  for (double a : {-3.0, 0.25, 10.0}) {
    const Eigen::VectorXd ap = (a * p).array() + 4.0;
    const Eigen::VectorXd at = (a * t).array() + 4.0;
    CHECK(rmse(ap, at) == doctest::Approx(std::abs(a) * rmse(p, t)).epsilon(1e-12));
  }
}

TEST_CASE("benchmark summary statistics") {
  const auto data = synthetic_mpg();
  const auto r = run_benchmark(data, quick(TrainMode::kStepwise));
  REQUIRE(r.runs.size() == 3);
  CHECK(r.failures == 0);
  const auto values = r.test_rmses();
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / 3.0;
  CHECK(std::abs(r.mean_rmse - mean) <= 1e-12);
  CHECK(r.parameter_count == 2 * 2 + 2 * 2 * 3 + 2 * 9);
  CHECK(r.eta0 == 1e-3);
  CHECK(r.actual.size() == 72);
  CHECK_FALSE(r.price_units);
  for (std::size_t s = 0; s < 3; ++s) CHECK(r.runs[s].seed == s);
}

TEST_CASE("benchmarks are deterministic and independent of the thread count") {
  const auto data = synthetic_mpg();
  auto o = quick(TrainMode::kBackprop);
  o.n_seeds = 1;
  const auto a = run_benchmark(data, o);
  const auto b = run_benchmark(data, o);
  CHECK(a.mean_rmse == b.mean_rmse);
  o.n_seeds = 3;
  const auto serial = run_benchmark(data, o);
  o.threads = 3;
  const auto parallel = run_benchmark(data, o);
  CHECK(serial.test_rmses() == parallel.test_rmses());
  CHECK(experiment_to_json(serial).dump() == experiment_to_json(parallel).dump());
}

TEST_CASE("both modes start from the same split and model") {
  const auto data = synthetic_mpg();
  const auto split_a = prepare_split(data, Protocol::kAutoMpgCase1, 2);
  const auto split_b = prepare_split(data, Protocol::kAutoMpgCase1, 2);
  CHECK(split_a.train.source_index == split_b.train.source_index);
  CHECK(benchmark_initial_model(split_a, 2, 2) == benchmark_initial_model(split_b, 2, 2));
  CHECK(run_benchmark(data, quick(TrainMode::kStepwise)).actual ==
        run_benchmark(data, quick(TrainMode::kBackprop)).actual);
}

TEST_CASE("failed seeds are excluded and counted") {
  auto data = synthetic_mpg();
  data.targets[0] = std::nan("");
  auto o = quick(TrainMode::kStepwise);
  o.n_seeds = 2;
  const auto r = run_benchmark(data, o);
  CHECK(r.failures == 2);
  CHECK(r.runs[0].failed);
  CHECK_FALSE(r.runs[0].failure.empty());
  CHECK(std::isnan(r.mean_rmse));
  CHECK(experiment_to_json(r)["mean_rmse"].is_null());
}

TEST_CASE("the results table lists method, neurons and rmse") {
  ExperimentResult a;
  a.mode = TrainMode::kStepwise;
  a.rules = 2;
  a.mean_rmse = 0.0697;
  ExperimentResult b = a;
  b.mode = TrainMode::kBackprop;
  b.mean_rmse = 0.0856;
  const auto table = format_table({a, b});
  CHECK(table.find("no. neurons") != std::string::npos);
  CHECK(table.find("TSK-ICFNN") != std::string::npos);
  CHECK(table.find("BPFNN") != std::string::npos);
  CHECK(table.find("0.0697") != std::string::npos);
  CHECK_THROWS_AS(run_benchmark(synthetic_mpg(), [] { auto o = quick(TrainMode::kStepwise); o.rules = 0; return o; }()),
                  ConfigurationError);
}
