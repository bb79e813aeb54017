#pragma once

#include <vector>

#include <Eigen/Dense>

#include "mpo/mdp.hpp"
#include "mpo/policy.hpp"

namespace mpo {

enum class EstimatorKind { Vanilla, MpoAverage, VrmpoRecursive, SvrpgIS };

// Running state of a gradient estimator. `value` always stores the
// ascent-direction estimate of grad J; descent negations live in the
// training loops so the sign convention has a single home.
struct EstimatorState {
  EstimatorKind kind = EstimatorKind::Vanilla;
  Eigen::VectorXd value;
  long count = 0;
  Eigen::VectorXd prev_theta;    // recursive kinds
  Eigen::VectorXd anchor_theta;  // SvrpgIS: epoch snapshot used for weights
  long clamp_events = 0;         // importance-weight clamps, SvrpgIS only

  static EstimatorState mpo_average(int dim);
};

// g(tau|theta) = (sum_t grad log pi(a_t|s_t)) * R(tau) with the full
// discounted return R(tau).
Eigen::VectorXd vanilla_gradient(const Trajectory& traj, const SoftmaxLinearPolicy& policy,
                                 double gamma);

// Incremental mean: value += (g_new - value) / (count + 1).
EstimatorState mpo_absorb(const EstimatorState& state, const Eigen::VectorXd& g_new);

// Batch initialization: mean of vanilla gradients of `trajs` under `policy`.
EstimatorState vrmpo_init(const std::vector<Trajectory>& trajs,
                          const SoftmaxLinearPolicy& policy, double gamma);

// Recursive correction: value += mean_j [ g(tau_j|theta_now) -
// g(tau_j|prev_theta) ], both terms on the same trajectory with a shared
// return; prev_theta advances to theta_now.
EstimatorState vrmpo_recursive_update(const EstimatorState& state,
                                      const std::vector<Trajectory>& trajs,
                                      const SoftmaxLinearPolicy& policy_now, double gamma);

// Batch initialization at the epoch anchor; records anchor_theta.
EstimatorState svrpg_init(const std::vector<Trajectory>& trajs,
                          const SoftmaxLinearPolicy& policy, double gamma);

// Importance-weighted recursion: value += mean_j [ g(tau_j|theta_now) -
// rho(tau_j) g(tau_j|prev_theta) ] with rho = prod_h pi_anchor / pi_now,
// computed in log space and clamped at exp(+-50) (clamps counted).
EstimatorState svrpg_is_update(const EstimatorState& state, const std::vector<Trajectory>& trajs,
                               const SoftmaxLinearPolicy& policy_now, double gamma);

// ||g(tau|theta) - exact_grad||^2, a per-trajectory deviation diagnostic.
double estimator_deviation_bound(const Trajectory& traj, const SoftmaxLinearPolicy& policy,
                                 double gamma, const Eigen::VectorXd& exact_grad);

}  // namespace mpo
