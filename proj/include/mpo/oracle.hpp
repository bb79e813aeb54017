#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mpo/estimators.hpp"
#include "mpo/mdp.hpp"
#include "mpo/policy.hpp"

namespace mpo {

// All trajectories terminating within a horizon cap, with their exact
// probabilities. tail_mass is the probability of not terminating by the cap.
struct EnumeratedDistribution {
  std::vector<std::pair<Trajectory, double>> entries;
  double tail_mass = 0.0;
  long horizon_cap = 0;
};

// Depth-first listing of every trajectory. Guarded: throws CapacityError
// when branching^cap exceeds 1e7 (the worst-case number of paths).
EnumeratedDistribution enumerate_trajectories(const Mdp& mdp, const SoftmaxLinearPolicy& policy,
                                              long horizon_cap);

// Exact expectations over the capped trajectory distribution, computed by a
// forward recursion over per-state prefix aggregates. Mathematically equal
// to summing the listed trajectories, but linear in cap instead of
// exponential; the two routes are cross-checked in tests.
struct TrajectoryMoments {
  double mass = 0.0;  // probability of terminating within the cap
  double tail = 0.0;  // 1 - mass
  double ret_mean = 0.0;            // E[R]
  double ret_sq = 0.0;              // E[R^2]
  Eigen::VectorXd grad_mean;        // E[u R], u = per-trajectory score sum
  Eigen::VectorXd score_sum_mean;   // E[u]
  double grad_sq = 0.0;             // E[||u||^2 R^2]
  Eigen::VectorXd grad_r2;          // E[u R^2]
  double score_sq = 0.0;            // E[||u||^2]
  double score_sq_ret = 0.0;        // E[||u||^2 R]
};

// `score_fn(s, a)` supplies the per-step vector accumulated into u. For the
// plain gradient it is the policy score; estimator oracles pass score
// differences between two parameter vectors.
TrajectoryMoments trajectory_moments(const Mdp& mdp, const SoftmaxLinearPolicy& sampling_policy,
                                     const std::function<Eigen::VectorXd(int, int)>& score_fn,
                                     long horizon_cap);

// E_tau[g(tau|theta)] over the capped distribution: the exact gradient.
Eigen::VectorXd exact_gradient(const Mdp& mdp, const SoftmaxLinearPolicy& policy,
                               long horizon_cap);

// Expected capped return plus tail mass, from the same recursion.
std::pair<double, double> enumeration_return(const Mdp& mdp, const SoftmaxLinearPolicy& policy,
                                             long horizon_cap);

// J(theta) = rho0' V with V solved from (I - gamma P_pi) V = r_pi. At
// gamma = 1 the chain must be absorbing (spectral radius of P_pi over
// nonterminal states < 1); otherwise throws DivergenceError.
double exact_return(const Mdp& mdp, const SoftmaxLinearPolicy& policy);

// Same linear solve for a fixed per-state action distribution.
double exact_return_fixed(const Mdp& mdp, const Eigen::MatrixXd& action_probs);

// Central finite differences of `objective`, step h per component.
Eigen::VectorXd finite_difference(const std::function<double(const Eigen::VectorXd&)>& objective,
                                  const Eigen::VectorXd& theta, double h = 1e-5);

// Exact mean and second central moment of a batch estimator.
// Vanilla: thetas = {theta}, batches = {N}.
// VrmpoRecursive: thetas = {theta_0..theta_T}, batches = {N1, N2, ...};
// stages are independent so variances add as per-draw variance / batch.
struct MomentResult {
  Eigen::VectorXd mean;
  double second_central_moment = 0.0;
  double tail = 0.0;
};
MomentResult estimator_moments(EstimatorKind kind, const Mdp& mdp, const FeatureMap& features,
                               const std::vector<Eigen::VectorXd>& thetas,
                               const std::vector<long>& batches, long horizon_cap);

// Exact start-state value of the corridor for each fixed p(right).
// Throws DivergenceError for p outside (0, 1).
std::vector<std::pair<double, double>> corridor_value_curve(const std::vector<double>& p_grid);

// max ||grad J(x) - grad J(y)|| / ||x - y|| over `pairs` random segments:
// x uniform in [lo, hi]^d, y = x + step * random unit direction.
double empirical_lipschitz(const Mdp& mdp, const FeatureMap& features, long horizon_cap,
                           double lo, double hi, int pairs, double step, std::uint64_t seed);

// Same ratio maximized over random sub-segments of [theta_a, theta_b].
double empirical_lipschitz_on_segment(const Mdp& mdp, const FeatureMap& features,
                                      long horizon_cap, const Eigen::VectorXd& theta_a,
                                      const Eigen::VectorXd& theta_b, int pairs,
                                      std::uint64_t seed);

}  // namespace mpo
