#pragma once

// Correlation-aware TSK fuzzy network: rule parameters and the seven-layer
// forward pass.
//
// Every rule i owns a center M_i, a general square transform Gamma_i, a
// shape regulator beta_i and an affine consequent a_i.  For an input x:
//
//   z_i      = Gamma_i (x - M_i)                 (row l of Gamma_i builds z_l)
//   mu_ij    = exp(-1/2 (z_ij^2)^beta_i)
//   mu_i     = prod_j mu_ij
//   phi_i    = mu_i / sum_l mu_l
//   y_i      = a_i0 + sum_j a_ij x_j
//   yhat     = sum_i phi_i y_i

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tskfnn/random.hpp"

namespace tskfnn {

/// Thrown when shapes handed to the network do not agree.
class ConfigurationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Numerical guards shared by the forward pass and the gradients.
template <typename Scalar>
struct Guards {
  static constexpr Scalar kActivationFloor = Scalar(1e-300);
  static constexpr Scalar kSquareFloor = Scalar(1e-300);
  static constexpr Scalar kBetaMin = Scalar(0.1);
  static constexpr Scalar kBetaMax = Scalar(10);
};

template <typename Scalar>
struct RuleParams {
  Vec<Scalar> center;      // M_i, length n
  Mat<Scalar> transform;   // Gamma_i, n x n
  Scalar shape_regulator;  // beta_i > 0
  Vec<Scalar> consequent;  // a_i0..a_in, index 0 is the bias

  Eigen::Index input_dim() const { return center.size(); }
};

template <typename Scalar>
struct Model {
  Eigen::Index input_dim = 0;
  std::vector<RuleParams<Scalar>> rules;

  Eigen::Index rule_count() const { return static_cast<Eigen::Index>(rules.size()); }

  /// Throws ConfigurationError if any rule disagrees with input_dim.
  void validate() const {
    if (input_dim < 1) throw ConfigurationError("model input_dim must be >= 1");
    if (rules.empty()) throw ConfigurationError("model needs at least one rule");
    for (std::size_t i = 0; i < rules.size(); ++i) {
      const auto& r = rules[i];
      const auto tag = "rule " + std::to_string(i) + ": ";
      if (r.center.size() != input_dim) throw ConfigurationError(tag + "center has wrong length");
      if (r.transform.rows() != input_dim || r.transform.cols() != input_dim)
        throw ConfigurationError(tag + "transform must be n x n");
      if (r.consequent.size() != input_dim + 1)
        throw ConfigurationError(tag + "consequent must have n+1 entries");
      if (!(r.shape_regulator > Scalar(0)))
        throw ConfigurationError(tag + "shape regulator must be positive");
      if (!r.center.allFinite() || !r.transform.allFinite() || !r.consequent.allFinite() ||
          !std::isfinite(static_cast<double>(r.shape_regulator)))
        throw ConfigurationError(tag + "non-finite parameter");
    }
  }

  bool operator==(const Model& other) const {
    if (input_dim != other.input_dim || rules.size() != other.rules.size()) return false;
    for (std::size_t i = 0; i < rules.size(); ++i) {
      const auto& a = rules[i];
      const auto& b = other.rules[i];
      if (a.center != b.center || a.transform != b.transform ||
          a.shape_regulator != b.shape_regulator || a.consequent != b.consequent)
        return false;
    }
    return true;
  }
};

using RuleParamsd = RuleParams<double>;
using Modeld = Model<double>;

/// p = 2R + 2Rn + Rn^2.
template <typename Scalar>
Eigen::Index parameter_count(const Model<Scalar>& model) {
  const Eigen::Index n = model.input_dim;
  const Eigen::Index r = model.rule_count();
  return 2 * r + 2 * r * n + r * n * n;
}

/// Z_i = Gamma_i (x - M_i).
template <typename Scalar, typename Derived>
Vec<Scalar> transform_inputs(const RuleParams<Scalar>& rule, const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != rule.center.size())
    throw ConfigurationError("input length " + std::to_string(x.size()) + " does not match rule dimension " +
                             std::to_string(rule.center.size()));
  return rule.transform * (x - rule.center);
}

/// (z^2)^beta, evaluated as exp(beta ln z^2) with z^2 floored; exactly 0 at z = 0.
template <typename Scalar>
Scalar powered_square(Scalar z, Scalar beta) {
  if (z == Scalar(0)) return Scalar(0);
  const Scalar sq = std::max(z * z, Guards<Scalar>::kSquareFloor);
  return std::exp(beta * std::log(sq));
}

/// exp(-1/2 (z^2)^beta), exactly 1 at z = 0.
template <typename Scalar>
Scalar membership(Scalar z, Scalar beta) {
  return std::exp(Scalar(-0.5) * powered_square(z, beta));
}

/// Intermediates of one forward evaluation.
template <typename Scalar>
struct ForwardTrace {
  std::vector<Vec<Scalar>> z;                // per rule, length n
  std::vector<Vec<Scalar>> dim_memberships;  // per rule, length n
  Vec<Scalar> rule_activation;               // mu_i, floored
  Vec<Scalar> firing_strength;               // phi_i
  Vec<Scalar> rule_output;                   // y_i
  Vec<Scalar> weighted_output;               // phi_i y_i
  Scalar output{};
};

template <typename Scalar, typename Derived>
ForwardTrace<Scalar> forward(const Model<Scalar>& model, const Eigen::MatrixBase<Derived>& x) {
  const auto r_count = model.rule_count();
  ForwardTrace<Scalar> trace;
  trace.z.reserve(model.rules.size());
  trace.dim_memberships.reserve(model.rules.size());
  trace.rule_activation.resize(r_count);
  trace.rule_output.resize(r_count);

  for (Eigen::Index i = 0; i < r_count; ++i) {
    const auto& rule = model.rules[static_cast<std::size_t>(i)];
    Vec<Scalar> z = transform_inputs(rule, x);
    Vec<Scalar> mem(z.size());
    Scalar exponent = 0;
    for (Eigen::Index l = 0; l < z.size(); ++l) {
      const Scalar p = powered_square(z[l], rule.shape_regulator);
      mem[l] = std::exp(Scalar(-0.5) * p);
      exponent += p;
    }
    trace.rule_activation[i] = std::max(std::exp(Scalar(-0.5) * exponent), Guards<Scalar>::kActivationFloor);
    trace.rule_output[i] = rule.consequent[0] + rule.consequent.tail(z.size()).dot(x);
    trace.z.push_back(std::move(z));
    trace.dim_memberships.push_back(std::move(mem));
  }
  trace.firing_strength = trace.rule_activation / trace.rule_activation.sum();
  trace.weighted_output = trace.firing_strength.cwiseProduct(trace.rule_output);
  trace.output = trace.weighted_output.sum();
  return trace;
}

/// Batched forward pass over the rows of an N x n input matrix.  Keeps what
/// the learning phases need: centered inputs, transformed features and their
/// powered squares per rule, plus the N x R activation/firing/output tables.
template <typename Scalar>
struct BatchTrace {
  std::vector<Mat<Scalar>> centered;  // per rule, N x n, rows x_k - M_i
  std::vector<Mat<Scalar>> z;         // per rule, N x n
  std::vector<Mat<Scalar>> powered;   // per rule, N x n, (z^2)^beta
  Mat<Scalar> activation;             // N x R, mu
  Mat<Scalar> firing;                 // N x R, phi
  Mat<Scalar> rule_output;            // N x R, y_i at each instance
  Vec<Scalar> output;                 // N

  Eigen::Index instances() const { return output.size(); }
};

namespace detail {

template <typename Scalar>
Mat<Scalar> powered_squares(const Mat<Scalar>& z, Scalar beta) {
  return z.unaryExpr([beta](Scalar v) { return powered_square(v, beta); });
}

}  // namespace detail

/// Recomputes rule outputs and network outputs only; premise tables stay.
template <typename Scalar>
void refresh_consequents(const Model<Scalar>& model, const Mat<Scalar>& inputs, BatchTrace<Scalar>& trace) {
  for (Eigen::Index i = 0; i < model.rule_count(); ++i) {
    const auto& a = model.rules[static_cast<std::size_t>(i)].consequent;
    trace.rule_output.col(i) = (inputs * a.tail(model.input_dim)).array() + a[0];
  }
  trace.output = trace.firing.cwiseProduct(trace.rule_output).rowwise().sum();
}

template <typename Scalar>
BatchTrace<Scalar> forward_batch(const Model<Scalar>& model, const Mat<Scalar>& inputs) {
  if (inputs.cols() != model.input_dim)
    throw ConfigurationError("input matrix has " + std::to_string(inputs.cols()) + " columns, model expects " +
                             std::to_string(model.input_dim));
  const auto n_inst = inputs.rows();
  const auto r_count = model.rule_count();
  BatchTrace<Scalar> trace;
  trace.activation.resize(n_inst, r_count);
  trace.rule_output.resize(n_inst, r_count);
  for (Eigen::Index i = 0; i < r_count; ++i) {
    const auto& rule = model.rules[static_cast<std::size_t>(i)];
    Mat<Scalar> centered = inputs.rowwise() - rule.center.transpose();
    Mat<Scalar> z = centered * rule.transform.transpose();
    Mat<Scalar> powered = detail::powered_squares(z, rule.shape_regulator);
    trace.activation.col(i) =
        (Scalar(-0.5) * powered.rowwise().sum()).array().exp().max(Guards<Scalar>::kActivationFloor);
    trace.centered.push_back(std::move(centered));
    trace.z.push_back(std::move(z));
    trace.powered.push_back(std::move(powered));
  }
  trace.firing = trace.activation.array().colwise() / trace.activation.rowwise().sum().array();
  refresh_consequents(model, inputs, trace);
  return trace;
}

/// Network outputs for each row of `inputs`.
template <typename Scalar>
Vec<Scalar> predict(const Model<Scalar>& model, const Mat<Scalar>& inputs) {
  return forward_batch(model, inputs).output;
}

/// Per-dimension value range used to place initial centers.
template <typename Scalar>
struct InputRange {
  Vec<Scalar> lower;
  Vec<Scalar> upper;
};

/// Random model: centers uniform over `range` (or U(-1,1)), Gamma = I + U(-0.05,0.05),
/// beta = 1, consequents U(-0.1,0.1).  Deterministic in `seed`.
template <typename Scalar>
Model<Scalar> init_random(Eigen::Index n, Eigen::Index rule_count, std::uint64_t seed,
                          const std::optional<InputRange<Scalar>>& range = std::nullopt) {
  if (n < 1 || rule_count < 1) throw ConfigurationError("init_random needs n >= 1 and R >= 1");
  if (range && (range->lower.size() != n || range->upper.size() != n))
    throw ConfigurationError("init range has wrong dimension");
  Rng rng(seed, RngStream::kInit);
  Model<Scalar> model;
  model.input_dim = n;
  model.rules.reserve(static_cast<std::size_t>(rule_count));
  for (Eigen::Index i = 0; i < rule_count; ++i) {
    RuleParams<Scalar> rule;
    rule.center.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double lo = range ? static_cast<double>(range->lower[j]) : -1.0;
      const double hi = range ? static_cast<double>(range->upper[j]) : 1.0;
      rule.center[j] = static_cast<Scalar>(rng.uniform(lo, hi));
    }
    rule.transform = Mat<Scalar>::Identity(n, n);
    for (Eigen::Index l = 0; l < n; ++l)
      for (Eigen::Index j = 0; j < n; ++j) rule.transform(l, j) += static_cast<Scalar>(rng.uniform(-0.05, 0.05));
    rule.shape_regulator = Scalar(1);
    rule.consequent.resize(n + 1);
    for (Eigen::Index j = 0; j <= n; ++j) rule.consequent[j] = static_cast<Scalar>(rng.uniform(-0.1, 0.1));
    model.rules.push_back(std::move(rule));
  }
  return model;
}

}  // namespace tskfnn
