#pragma once

#include "tskfnn/model.hpp"

namespace tskfnn {

/// One learning rate and one running step average per scalar parameter.
template <typename Scalar>
struct LrState {
  Vec<Scalar> eta;
  Vec<Scalar> delta_avg;

  static LrState fresh(Eigen::Index size, Scalar eta0) {
    return {Vec<Scalar>::Constant(size, eta0), Vec<Scalar>::Zero(size)};
  }

  void reset(Scalar eta0) {
    eta.setConstant(eta0);
    delta_avg.setZero();
  }
};

/// Sign-agreement schedule.  The running average is updated first,
///   avg <- alpha delta + (1 - alpha) avg,
/// then eta shrinks by zeta wherever avg * delta < 0 and is left alone
/// otherwise (a zero product counts as agreement).
template <typename Scalar>
void lr_update(LrState<Scalar>& state, const Vec<Scalar>& delta, Scalar alpha, Scalar zeta) {
  state.delta_avg = alpha * delta + (Scalar(1) - alpha) * state.delta_avg;
  const auto disagree = (state.delta_avg.array() * delta.array()) < Scalar(0);
  state.eta = disagree.select(zeta * state.eta, state.eta);
}

}  // namespace tskfnn
