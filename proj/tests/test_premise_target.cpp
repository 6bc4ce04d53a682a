#include "doctest.h"

#include "oracles.hpp"
#include "support.hpp"
#include "tskfnn/premise_target.hpp"

using namespace tskfnn;

namespace {

PremiseTargets<double> solve_row(std::initializer_list<double> phi, std::initializer_list<double> y, double target) {
  Eigen::MatrixXd p(1, static_cast<Eigen::Index>(phi.size())), r(1, static_cast<Eigen::Index>(y.size()));
  Eigen::Index k = 0;
  for (double v : phi) p(0, k++) = v;
  k = 0;
  for (double v : y) r(0, k++) = v;
  return solve_targets<double>(p, r, Eigen::VectorXd::Constant(1, target));
}

}  // namespace

TEST_CASE("targets for satisfied, corrected and single-rule instances") {
  auto same = solve_row({0.5, 0.5}, {1.0, 1.0}, 1.0);
  CHECK(same.lagrange[0] == 0.0);
  CHECK(same.psi(0, 0) == 0.5);
  CHECK(same.psi(0, 1) == 0.5);

  auto moved = solve_row({0.6, 0.4}, {2.0, 1.0}, 1.0);
  CHECK(moved.lagrange[0] == doctest::Approx(0.12));
  CHECK(moved.psi(0, 0) == doctest::Approx(0.36));
  CHECK(moved.psi(0, 1) == doctest::Approx(0.28));
  CHECK(2 * moved.psi(0, 0) + moved.psi(0, 1) == doctest::Approx(1.0));

  auto single = solve_row({0.9}, {2.0}, 1.0);
  CHECK(single.psi(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("zero consequent outputs are degenerate and keep phi") {
  auto t = solve_row({0.3, 0.7}, {0.0, 0.0}, 1.0);
  CHECK(t.degenerate == 1);
  CHECK(t.psi(0, 0) == 0.3);
  CHECK(t.lagrange[0] == 0.0);
}

TEST_CASE("oracle examples") {
  const Eigen::VectorXd psi = oracle::project(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 0), 1.0);
  CHECK(psi[0] == doctest::Approx(1.0));
  CHECK(psi[1] == doctest::Approx(0.0).epsilon(1e-15));
  const Eigen::Vector3d on_plane(0.2, 0.3, 0.5);
  const Eigen::Vector3d y(1.0, 2.0, -1.0);
  CHECK((oracle::project(on_plane, y, on_plane.dot(y)) - on_plane).norm() < 1e-15);
  CHECK_THROWS(oracle::project(on_plane, Eigen::Vector3d::Zero(), 1.0));
}

TEST_CASE("closed form matches the KKT oracle on 1000 random rows") {
  const Eigen::Index n_rows = 1000;
  Rng rng(17, RngStream::kInit);
  for (Eigen::Index r = 1; r <= 4; ++r) {
    const auto phi = testing::uniform_matrix(n_rows, r, 100 + r, 0.0, 1.0);
    const auto y = testing::uniform_matrix(n_rows, r, 200 + r, -3.0, 3.0);
    const auto target = testing::uniform_vector(n_rows, 300 + r, -2.0, 2.0);
    const auto t = solve_targets<double>(phi, y, target);
    CHECK(t.degenerate == 0);
    double worst_match = 0.0, worst_constraint = 0.0;
    for (Eigen::Index q = 0; q < n_rows; ++q) {
      const Eigen::VectorXd expected = oracle::project(phi.row(q).transpose(), y.row(q).transpose(), target[q]);
      worst_match = std::max(worst_match, (t.psi.row(q).transpose() - expected).cwiseAbs().maxCoeff());
      const double lhs = t.psi.row(q).dot(y.row(q));
      worst_constraint = std::max(worst_constraint, std::abs(lhs - target[q]) / std::max(1.0, std::abs(target[q])));
    }
    CHECK(worst_match < 1e-10);
    CHECK(worst_constraint < 1e-9);
  }
}

TEST_CASE("closed form matches a brute-force line search for two rules") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Eigen::Vector2d phi = testing::uniform_vector(2, seed, 0.0, 1.0);
    const Eigen::Vector2d y = testing::uniform_vector(2, seed + 1000, -2.0, 2.0);
    const double target = testing::uniform_vector(1, seed + 2000)[0];
    Eigen::MatrixXd p = phi.transpose(), r = y.transpose();
    const auto t = solve_targets<double>(p, r, Eigen::VectorXd::Constant(1, target));
    const Eigen::Vector2d searched = oracle::project_by_search(phi, y, target);
    CHECK((t.psi.row(0).transpose() - searched).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("psi is the closest feasible point") {
  Rng rng(3, RngStream::kInit);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Eigen::Index r = 3;
    Eigen::MatrixXd phi = testing::uniform_matrix(1, r, seed, 0.0, 1.0);
    Eigen::MatrixXd y = testing::uniform_matrix(1, r, seed + 7, -2.0, 2.0);
    const double target = rng.uniform(-1.0, 1.0);
    const auto t = solve_targets<double>(phi, y, Eigen::VectorXd::Constant(1, target));
    const double best = (t.psi - phi).norm();
    for (int trial = 0; trial < 20; ++trial) {
      // Any feasible point is psi plus a step orthogonal to y.
      Eigen::RowVectorXd step = testing::uniform_matrix(1, r, seed * 100 + trial + 50);
      step -= (step.dot(y.row(0)) / y.row(0).squaredNorm()) * y.row(0);
      const Eigen::RowVectorXd other = t.psi.row(0) + step;
      CHECK(std::abs(other.dot(y.row(0)) - target) < 1e-9);
      CHECK(best <= (other - phi.row(0)).norm() + 1e-15);
    }
  }
}

TEST_CASE("zero residual leaves phi unchanged and scaling outputs leaves psi unchanged") {
  const auto phi = testing::uniform_matrix(40, 3, 1, 0.0, 1.0);
  const auto y = testing::uniform_matrix(40, 3, 2, -2.0, 2.0);
  const Eigen::VectorXd exact = phi.cwiseProduct(y).rowwise().sum();
  const auto t = solve_targets<double>(phi, y, exact);
  CHECK((t.psi - phi).cwiseAbs().maxCoeff() == 0.0);
  CHECK(t.lagrange.cwiseAbs().maxCoeff() == 0.0);

  const auto target = testing::uniform_vector(40, 3);
  const auto base = solve_targets<double>(phi, y, target);
  for (double c : {-3.0, 0.5, 7.0}) {
    const auto scaled = solve_targets<double>(phi, Eigen::MatrixXd(c * y), Eigen::VectorXd(c * target));
    CHECK((scaled.psi - base.psi).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((scaled.lagrange * c - base.lagrange).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("projection objective") {
  Eigen::MatrixXd phi(1, 2), psi(1, 2);
  phi << 0.6, 0.4;
  psi << 0.36, 0.28;
  CHECK(projection_objective<double>(phi, psi) == doctest::Approx(0.5 * (0.24 * 0.24 + 0.12 * 0.12)));
  CHECK_THROWS_AS(solve_targets<double>(phi, Eigen::MatrixXd(2, 2), Eigen::VectorXd(1)), ConfigurationError);
}
