#pragma once

// Flat views of the model parameters, used by the per-parameter learning
// rates and by tests.  Premise layout per rule: center (n), transform
// row-major (n*n), shape regulator (1).  Consequent layout per rule: a_0..a_n.

#include <algorithm>

#include "tskfnn/gradients.hpp"
#include "tskfnn/model.hpp"

namespace tskfnn {

template <typename Scalar>
Eigen::Index premise_size(const Model<Scalar>& m) {
  return m.rule_count() * (m.input_dim + m.input_dim * m.input_dim + 1);
}

template <typename Scalar>
Eigen::Index consequent_size(const Model<Scalar>& m) {
  return m.rule_count() * (m.input_dim + 1);
}

template <typename Scalar>
Vec<Scalar> premise_vector(const Model<Scalar>& m) {
  Vec<Scalar> out(premise_size(m));
  Eigen::Index at = 0;
  const auto n = m.input_dim;
  for (const auto& r : m.rules) {
    out.segment(at, n) = r.center;
    at += n;
    for (Eigen::Index l = 0; l < n; ++l) {
      out.segment(at, n) = r.transform.row(l).transpose();
      at += n;
    }
    out[at++] = r.shape_regulator;
  }
  return out;
}

template <typename Scalar>
void set_premise_vector(Model<Scalar>& m, const Vec<Scalar>& v) {
  if (v.size() != premise_size(m)) throw ConfigurationError("premise vector has wrong length");
  Eigen::Index at = 0;
  const auto n = m.input_dim;
  for (auto& r : m.rules) {
    r.center = v.segment(at, n);
    at += n;
    for (Eigen::Index l = 0; l < n; ++l) {
      r.transform.row(l) = v.segment(at, n).transpose();
      at += n;
    }
    r.shape_regulator = v[at++];
  }
}

template <typename Scalar>
Vec<Scalar> consequent_vector(const Model<Scalar>& m) {
  Vec<Scalar> out(consequent_size(m));
  Eigen::Index at = 0;
  for (const auto& r : m.rules) {
    out.segment(at, r.consequent.size()) = r.consequent;
    at += r.consequent.size();
  }
  return out;
}

template <typename Scalar>
void set_consequent_vector(Model<Scalar>& m, const Vec<Scalar>& v) {
  if (v.size() != consequent_size(m)) throw ConfigurationError("consequent vector has wrong length");
  Eigen::Index at = 0;
  for (auto& r : m.rules) {
    r.consequent = v.segment(at, m.input_dim + 1);
    at += m.input_dim + 1;
  }
}

template <typename Scalar>
Vec<Scalar> flatten(const PremiseGradient<Scalar>& g) {
  Eigen::Index total = 0;
  for (std::size_t i = 0; i < g.center.size(); ++i) total += g.center[i].size() + g.transform[i].size() + 1;
  Vec<Scalar> out(total);
  Eigen::Index at = 0;
  for (std::size_t i = 0; i < g.center.size(); ++i) {
    const auto n = g.center[i].size();
    out.segment(at, n) = g.center[i];
    at += n;
    for (Eigen::Index l = 0; l < n; ++l) {
      out.segment(at, n) = g.transform[i].row(l).transpose();
      at += n;
    }
    out[at++] = g.shape[static_cast<Eigen::Index>(i)];
  }
  return out;
}

template <typename Scalar>
Vec<Scalar> flatten(const ConsequentGradient<Scalar>& g) {
  Eigen::Index total = 0;
  for (const auto& a : g.consequent) total += a.size();
  Vec<Scalar> out(total);
  Eigen::Index at = 0;
  for (const auto& a : g.consequent) {
    out.segment(at, a.size()) = a;
    at += a.size();
  }
  return out;
}

/// Keeps every shape regulator inside [kBetaMin, kBetaMax].
template <typename Scalar>
void clamp_shape_regulators(Model<Scalar>& m) {
  for (auto& r : m.rules)
    r.shape_regulator = std::clamp(r.shape_regulator, Guards<Scalar>::kBetaMin, Guards<Scalar>::kBetaMax);
}

}  // namespace tskfnn
