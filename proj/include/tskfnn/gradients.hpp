#pragma once

// Full-batch descent directions (negative gradients) for the three
// objectives used in training:
//
//   J2 = 1/2 sum_k sum_i (mu_ik - psi_ik)^2   premise parameters, stepwise
//   J3 = 1/2 sum_k (yhat_k - y*_k)^2          consequents (both trainers) and
//                                             premise parameters (backprop)
//
// Premise derivatives go through log mu, which is a plain sum over features:
//
//   d ln mu / d z_l  = -beta z_l (z_l^2)^(beta-1)
//   d ln mu / d beta = -1/2 sum_l (z_l^2)^beta ln(z_l^2)
//   d z_l / d gamma_lj = x_j - m_j,   d z_l / d m_j = -gamma_lj
//
// so a gradient is sum_k c_ik d ln mu_ik / d theta with a per-objective
// sensitivity c:
//
//   J2:  c_ik = (mu_ik - psi_ik) mu_ik
//   J3:  c_ik = e_k (y_ik - yhat_k) phi_ik     (quotient rule through phi)

#include <cmath>
#include <cstddef>
#include <vector>

#include "tskfnn/model.hpp"
#include "tskfnn/premise_target.hpp"

namespace tskfnn {

/// Gradient elements are clamped to this magnitude; non-finite ones are counted.
inline constexpr double kGradientClamp = 1e6;

template <typename Scalar>
struct PremiseGradient {
  std::vector<Mat<Scalar>> transform;  // per rule, n x n
  std::vector<Vec<Scalar>> center;     // per rule, n
  Vec<Scalar> shape;                   // R
  std::size_t clamped = 0;
};

template <typename Scalar>
struct ConsequentGradient {
  std::vector<Vec<Scalar>> consequent;  // per rule, n + 1
  std::size_t clamped = 0;
};

template <typename Scalar>
struct FullGradient {
  PremiseGradient<Scalar> premise;
  ConsequentGradient<Scalar> consequent;
};

namespace detail {

template <typename Derived>
std::size_t clamp_in_place(Eigen::DenseBase<Derived>& values) {
  using Scalar = typename Derived::Scalar;
  const Scalar limit = Scalar(kGradientClamp);
  std::size_t count = 0;
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      Scalar& v = values(r, c);
      if (std::isnan(v)) {
        v = Scalar(0);
        ++count;
      } else if (v > limit) {
        v = limit;
        ++count;
      } else if (v < -limit) {
        v = -limit;
        ++count;
      }
    }
  }
  return count;
}

/// d ln mu / d z, elementwise over an N x n feature table.
template <typename Scalar>
Mat<Scalar> log_membership_slope(const Mat<Scalar>& z, Scalar beta) {
  return z.unaryExpr([beta](Scalar v) -> Scalar {
    if (v == Scalar(0)) return Scalar(0);
    const Scalar sq = std::max(v * v, Guards<Scalar>::kSquareFloor);
    return -beta * v * std::exp((beta - Scalar(1)) * std::log(sq));
  });
}

/// d ln mu / d beta per instance, with the z = 0 terms defined as 0.
template <typename Scalar>
Vec<Scalar> log_membership_shape_slope(const Mat<Scalar>& z, const Mat<Scalar>& powered) {
  Mat<Scalar> terms = powered.binaryExpr(z, [](Scalar p, Scalar v) -> Scalar {
    if (v == Scalar(0)) return Scalar(0);
    return p * std::log(std::max(v * v, Guards<Scalar>::kSquareFloor));
  });
  return Scalar(-0.5) * terms.rowwise().sum();
}

/// Negative gradient of sum_k sum_i c_ik ln mu_ik with respect to premise parameters.
template <typename Scalar>
PremiseGradient<Scalar> premise_descent(const Model<Scalar>& model, const BatchTrace<Scalar>& trace,
                                        const Mat<Scalar>& sensitivity) {
  PremiseGradient<Scalar> g;
  const auto r_count = model.rule_count();
  g.shape.resize(r_count);
  for (Eigen::Index i = 0; i < r_count; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    const auto& rule = model.rules[idx];
    const auto c = sensitivity.col(i);
    // rows: c_k d ln mu_k / d z
    Mat<Scalar> weighted = log_membership_slope(trace.z[idx], rule.shape_regulator).array().colwise() * c.array();
    Mat<Scalar> d_transform = -(weighted.transpose() * trace.centered[idx]);
    Vec<Scalar> d_center = rule.transform.transpose() * weighted.colwise().sum().transpose();
    Scalar d_shape = -c.dot(log_membership_shape_slope(trace.z[idx], trace.powered[idx]));
    g.clamped += clamp_in_place(d_transform);
    g.clamped += clamp_in_place(d_center);
    Eigen::Matrix<Scalar, 1, 1> boxed(d_shape);
    g.clamped += clamp_in_place(boxed);
    g.shape[i] = boxed(0, 0);
    g.transform.push_back(std::move(d_transform));
    g.center.push_back(std::move(d_center));
  }
  return g;
}

}  // namespace detail

template <typename Scalar>
Scalar premise_objective(const Mat<Scalar>& activation, const Mat<Scalar>& psi) {
  return Scalar(0.5) * (activation - psi).squaredNorm();
}

template <typename Scalar>
Scalar output_objective(const Vec<Scalar>& output, const Vec<Scalar>& targets) {
  return Scalar(0.5) * (output - targets).squaredNorm();
}

/// -dJ2/d(Gamma, M, beta) with psi held fixed.
template <typename Scalar>
PremiseGradient<Scalar> grad_premise(const Model<Scalar>& model, const BatchTrace<Scalar>& trace,
                                     const PremiseTargets<Scalar>& targets) {
  if (targets.psi.rows() != trace.activation.rows() || targets.psi.cols() != trace.activation.cols())
    throw ConfigurationError("grad_premise: psi shape does not match trace");
  const Mat<Scalar> sensitivity = (trace.activation - targets.psi).cwiseProduct(trace.activation);
  return detail::premise_descent(model, trace, sensitivity);
}

/// -dJ3/da: Delta a_ij = -sum_k e_k phi_ik x_kj with x_k0 = 1.
template <typename Scalar>
ConsequentGradient<Scalar> grad_consequent(const Model<Scalar>& model, const BatchTrace<Scalar>& trace,
                                           const Mat<Scalar>& inputs, const Vec<Scalar>& targets) {
  if (targets.size() != trace.instances() || inputs.rows() != trace.instances())
    throw ConfigurationError("grad_consequent: inputs/targets do not match trace");
  const Vec<Scalar> error = trace.output - targets;
  ConsequentGradient<Scalar> g;
  for (Eigen::Index i = 0; i < model.rule_count(); ++i) {
    const Vec<Scalar> weighted = error.cwiseProduct(trace.firing.col(i));
    Vec<Scalar> d(model.input_dim + 1);
    d[0] = -weighted.sum();
    d.tail(model.input_dim) = -(inputs.transpose() * weighted);
    g.clamped += detail::clamp_in_place(d);
    g.consequent.push_back(std::move(d));
  }
  return g;
}

/// -dJ3/d(all parameters), backpropagating e_k through the normalization layer.
template <typename Scalar>
FullGradient<Scalar> grad_backprop(const Model<Scalar>& model, const BatchTrace<Scalar>& trace,
                                   const Mat<Scalar>& inputs, const Vec<Scalar>& targets) {
  FullGradient<Scalar> g;
  g.consequent = grad_consequent(model, trace, inputs, targets);
  const Vec<Scalar> error = trace.output - targets;
  const Mat<Scalar> spread = trace.rule_output.colwise() - trace.output;
  const Mat<Scalar> sensitivity = (spread.cwiseProduct(trace.firing)).array().colwise() * error.array();
  g.premise = detail::premise_descent(model, trace, sensitivity);
  return g;
}

}  // namespace tskfnn
