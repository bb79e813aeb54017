#pragma once

#include <optional>

#include <Eigen/Dense>

#include "mpo/mdp.hpp"

namespace mpo {

// Feature vectors phi(s, a), one row per (state, action) pair.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(Eigen::MatrixXd rows, int num_actions)
      : rows_(std::move(rows)), num_actions_(num_actions) {}

  // One-hot feature per (s, a); dimension num_states * num_actions.
  static FeatureMap tabular(int num_states, int num_actions);

  // Two-dimensional action features shared across states:
  // phi(s, right) = [1, 0], phi(s, left) = [0, 1].
  static FeatureMap corridor_shared(int num_states);

  int dim() const { return static_cast<int>(rows_.cols()); }
  int num_actions() const { return num_actions_; }
  int num_state_action_pairs() const { return static_cast<int>(rows_.rows()); }

  Eigen::VectorXd row(int state, int action) const {
    return rows_.row(state * num_actions_ + action).transpose();
  }
  double max_abs_entry() const { return rows_.size() ? rows_.cwiseAbs().maxCoeff() : 0.0; }

 private:
  Eigen::MatrixXd rows_;
  int num_actions_ = 0;
};

// Exponential soft-max policy over linear action preferences phi(s,a)' theta.
class SoftmaxLinearPolicy {
 public:
  SoftmaxLinearPolicy() = default;
  SoftmaxLinearPolicy(FeatureMap features, Eigen::VectorXd theta);

  const FeatureMap& features() const { return features_; }
  const Eigen::VectorXd& theta() const { return theta_; }
  int dim() const { return static_cast<int>(theta_.size()); }
  int num_actions() const { return features_.num_actions(); }

  SoftmaxLinearPolicy with_theta(Eigen::VectorXd theta) const;

  // Soft-max probabilities at one state, computed with max-subtraction.
  // Always strictly positive and summing to 1 for finite theta.
  Eigen::VectorXd action_probabilities(int state) const;

  double log_prob(int state, int action) const;

  // Gradient of log pi(a|s) w.r.t. theta:
  // phi(s,a) - sum_a' pi(a'|s) phi(s,a').
  Eigen::VectorXd score(int state, int action) const;

 private:
  Eigen::VectorXd logits(int state) const;

  FeatureMap features_;
  Eigen::VectorXd theta_;
};

// Diagnostic bounds on the policy family and the derived smoothness and
// estimator-deviation constants. `smoothness` and `deviation` are empty at
// gamma = 1, where the closed forms are undefined.
struct AssumptionConstants {
  double score_bound = 0.0;      // G: per-component bound on |d log pi / d theta_i|
  double curvature_bound = 0.0;  // F: bound on the mixed second partials
  double grid_score_max = 0.0;   // measured max |score| over the documented theta grid
  double grid_curvature_max = 0.0;
  std::optional<double> smoothness;  // L
  std::optional<double> deviation;   // sigma
};

// L = R * H * (H * G^2 + F) / (1 - gamma).
double smoothness_constant(double r_max, double horizon, double score_bound,
                           double curvature_bound, double gamma);

// sigma^2 = G^2 R^2 / (1 - gamma)^4.
double sigma_squared(double score_bound, double r_max, double gamma);

// Analytic bounds (G <= 2 max|phi|, F <= max|phi|^2) plus measured maxima
// over a fixed 128-point theta grid in [-3, 3]^d.
AssumptionConstants assumption_constants(const SoftmaxLinearPolicy& policy, const Mdp& mdp);

// Uniform theta in [lo, hi]^dim drawn from `rng`.
Eigen::VectorXd sample_initial_theta(int dim, double lo, double hi, Rng& rng);

}  // namespace mpo
