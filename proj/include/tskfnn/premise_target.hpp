#pragma once

// Desired firing strengths.  For every instance q the current strengths
// phi_q are moved to the nearest point psi_q (in the Euclidean sense) that
// satisfies  sum_i psi_iq y_iq = y*_q :
//
//   lambda_q = (phi_q . y_q - y*_q) / (y_q . y_q)
//   psi_q    = phi_q - lambda_q y_q
//
// psi is deliberately left unclipped; it may leave [0, 1].

#include <cstddef>

#include "tskfnn/model.hpp"

namespace tskfnn {

template <typename Scalar>
struct PremiseTargets {
  Mat<Scalar> psi;       // N x R
  Vec<Scalar> lagrange;  // N
  std::size_t degenerate = 0;
};

/// Instances whose consequent outputs have squared norm below this keep psi = phi.
inline constexpr double kDegenerateOutputNorm = 1e-12;

template <typename Scalar>
PremiseTargets<Scalar> solve_targets(const Mat<Scalar>& phi, const Mat<Scalar>& rule_outputs,
                                     const Vec<Scalar>& targets) {
  if (phi.rows() != rule_outputs.rows() || phi.cols() != rule_outputs.cols() || phi.rows() != targets.size())
    throw ConfigurationError("solve_targets: phi, rule outputs and targets disagree in shape");

  PremiseTargets<Scalar> out;
  out.psi = phi;
  out.lagrange = Vec<Scalar>::Zero(phi.rows());
  const Vec<Scalar> norms = rule_outputs.rowwise().squaredNorm();
  const Vec<Scalar> residual = phi.cwiseProduct(rule_outputs).rowwise().sum() - targets;
  for (Eigen::Index q = 0; q < phi.rows(); ++q) {
    if (!(norms[q] >= Scalar(kDegenerateOutputNorm))) {
      ++out.degenerate;
      continue;
    }
    out.lagrange[q] = residual[q] / norms[q];
    out.psi.row(q) -= out.lagrange[q] * rule_outputs.row(q);
  }
  return out;
}

/// J1 = 1/2 sum (phi - psi)^2.
template <typename Scalar>
Scalar projection_objective(const Mat<Scalar>& phi, const Mat<Scalar>& psi) {
  return Scalar(0.5) * (phi - psi).squaredNorm();
}

}  // namespace tskfnn
