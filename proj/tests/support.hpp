#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "tskfnn/model.hpp"
#include "tskfnn/random.hpp"

namespace tskfnn::testing {

/// A model away from the symmetric initial state: dense transforms, mixed
/// shape regulators and non-trivial consequents.
inline Modeld scrambled_model(Eigen::Index n, Eigen::Index rules, std::uint64_t seed) {
  Rng rng(seed, RngStream::kInit);
  Modeld m;
  m.input_dim = n;
  for (Eigen::Index i = 0; i < rules; ++i) {
    RuleParamsd r;
    r.center = Eigen::VectorXd::NullaryExpr(n, [&] { return rng.uniform(-0.5, 0.5); });
    r.transform = Eigen::MatrixXd::NullaryExpr(n, n, [&] { return rng.uniform(-0.6, 0.6); });
    r.transform.diagonal().array() += 1.0;
    r.shape_regulator = rng.uniform(0.6, 2.5);
    r.consequent = Eigen::VectorXd::NullaryExpr(n + 1, [&] { return rng.uniform(-1.0, 1.0); });
    m.rules.push_back(std::move(r));
  }
  return m;
}

inline Eigen::MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double lo = -1.0,
                                      double hi = 1.0) {
  Rng rng(seed, RngStream::kSplit);
  return Eigen::MatrixXd::NullaryExpr(rows, cols, [&] { return rng.uniform(lo, hi); });
}

inline Eigen::VectorXd uniform_vector(Eigen::Index size, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  return uniform_matrix(size, 1, seed, lo, hi);
}

}  // namespace tskfnn::testing
