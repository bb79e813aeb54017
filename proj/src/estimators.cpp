#include "mpo/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "mpo/errors.hpp"

namespace mpo {

namespace {
constexpr double kLogWeightClamp = 50.0;
}

EstimatorState EstimatorState::mpo_average(int dim) {
  EstimatorState state;
  state.kind = EstimatorKind::MpoAverage;
  state.value = Eigen::VectorXd::Zero(dim);
  return state;
}

Eigen::VectorXd vanilla_gradient(const Trajectory& traj, const SoftmaxLinearPolicy& policy,
                                 double gamma) {
  Eigen::VectorXd score_sum = Eigen::VectorXd::Zero(policy.dim());
  for (const Step& s : traj.steps) score_sum += policy.score(s.state, s.action);
  return score_sum * discounted_return(traj, gamma);
}

EstimatorState mpo_absorb(const EstimatorState& state, const Eigen::VectorXd& g_new) {
  if (state.kind != EstimatorKind::MpoAverage) {
    throw ValidationError("mpo_absorb: estimator state is not a running average");
  }
  if (g_new.size() != state.value.size()) {
    throw ValidationError("mpo_absorb: gradient dimension mismatch");
  }
  EstimatorState next = state;
  next.count = state.count + 1;
  next.value = state.value + (g_new - state.value) / static_cast<double>(next.count);
  return next;
}

EstimatorState vrmpo_init(const std::vector<Trajectory>& trajs,
                          const SoftmaxLinearPolicy& policy, double gamma) {
  if (trajs.empty()) throw ValidationError("vrmpo_init: empty trajectory batch");
  EstimatorState state;
  state.kind = EstimatorKind::VrmpoRecursive;
  state.value = Eigen::VectorXd::Zero(policy.dim());
  for (const Trajectory& traj : trajs) state.value += vanilla_gradient(traj, policy, gamma);
  state.value /= static_cast<double>(trajs.size());
  state.prev_theta = policy.theta();
  state.count = static_cast<long>(trajs.size());
  return state;
}

EstimatorState vrmpo_recursive_update(const EstimatorState& state,
                                      const std::vector<Trajectory>& trajs,
                                      const SoftmaxLinearPolicy& policy_now, double gamma) {
  if (state.kind != EstimatorKind::VrmpoRecursive) {
    throw ValidationError("vrmpo_recursive_update: wrong estimator kind");
  }
  if (trajs.empty()) throw ValidationError("vrmpo_recursive_update: empty trajectory batch");
  if (state.prev_theta.size() != policy_now.dim()) {
    throw ValidationError("vrmpo_recursive_update: parameter dimension mismatch");
  }
  const SoftmaxLinearPolicy policy_prev = policy_now.with_theta(state.prev_theta);
  Eigen::VectorXd correction = Eigen::VectorXd::Zero(policy_now.dim());
  for (const Trajectory& traj : trajs) {
    // Both terms share the trajectory and its return; only the scores are
    // re-evaluated under each parameter vector.
    const double ret = discounted_return(traj, gamma);
    Eigen::VectorXd diff = Eigen::VectorXd::Zero(policy_now.dim());
    for (const Step& s : traj.steps) {
      diff += policy_now.score(s.state, s.action) - policy_prev.score(s.state, s.action);
    }
    correction += diff * ret;
  }
  EstimatorState next = state;
  next.value = state.value + correction / static_cast<double>(trajs.size());
  next.prev_theta = policy_now.theta();
  next.count = state.count + static_cast<long>(trajs.size());
  return next;
}

EstimatorState svrpg_init(const std::vector<Trajectory>& trajs,
                          const SoftmaxLinearPolicy& policy, double gamma) {
  if (trajs.empty()) throw ValidationError("svrpg_init: empty trajectory batch");
  EstimatorState state;
  state.kind = EstimatorKind::SvrpgIS;
  state.value = Eigen::VectorXd::Zero(policy.dim());
  for (const Trajectory& traj : trajs) state.value += vanilla_gradient(traj, policy, gamma);
  state.value /= static_cast<double>(trajs.size());
  state.prev_theta = policy.theta();
  state.anchor_theta = policy.theta();
  state.count = static_cast<long>(trajs.size());
  return state;
}

EstimatorState svrpg_is_update(const EstimatorState& state, const std::vector<Trajectory>& trajs,
                               const SoftmaxLinearPolicy& policy_now, double gamma) {
  if (state.kind != EstimatorKind::SvrpgIS) {
    throw ValidationError("svrpg_is_update: wrong estimator kind");
  }
  if (trajs.empty()) throw ValidationError("svrpg_is_update: empty trajectory batch");
  const SoftmaxLinearPolicy policy_prev = policy_now.with_theta(state.prev_theta);
  const SoftmaxLinearPolicy policy_anchor = policy_now.with_theta(state.anchor_theta);
  EstimatorState next = state;
  Eigen::VectorXd correction = Eigen::VectorXd::Zero(policy_now.dim());
  for (const Trajectory& traj : trajs) {
    double log_rho = 0.0;
    for (const Step& s : traj.steps) {
      log_rho += policy_anchor.log_prob(s.state, s.action) -
                 policy_now.log_prob(s.state, s.action);
    }
    if (std::abs(log_rho) > kLogWeightClamp) {
      log_rho = std::clamp(log_rho, -kLogWeightClamp, kLogWeightClamp);
      ++next.clamp_events;
    }
    const double rho = std::exp(log_rho);
    correction += vanilla_gradient(traj, policy_now, gamma) -
                  rho * vanilla_gradient(traj, policy_prev, gamma);
  }
  next.value = state.value + correction / static_cast<double>(trajs.size());
  next.prev_theta = policy_now.theta();
  next.count = state.count + static_cast<long>(trajs.size());
  return next;
}

double estimator_deviation_bound(const Trajectory& traj, const SoftmaxLinearPolicy& policy,
                                 double gamma, const Eigen::VectorXd& exact_grad) {
  return (vanilla_gradient(traj, policy, gamma) - exact_grad).squaredNorm();
}

}  // namespace mpo
