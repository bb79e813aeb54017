#include "mpo/policy.hpp"

#include <cmath>

#include "mpo/errors.hpp"

namespace mpo {

FeatureMap FeatureMap::tabular(int num_states, int num_actions) {
  Eigen::MatrixXd rows =
      Eigen::MatrixXd::Identity(num_states * num_actions, num_states * num_actions);
  return FeatureMap(std::move(rows), num_actions);
}

FeatureMap FeatureMap::corridor_shared(int num_states) {
  Eigen::MatrixXd rows(num_states * 2, 2);
  for (int s = 0; s < num_states; ++s) {
    rows.row(s * 2 + 0) << 0.0, 1.0;  // left
    rows.row(s * 2 + 1) << 1.0, 0.0;  // right
  }
  return FeatureMap(std::move(rows), 2);
}

SoftmaxLinearPolicy::SoftmaxLinearPolicy(FeatureMap features, Eigen::VectorXd theta)
    : features_(std::move(features)), theta_(std::move(theta)) {
  if (theta_.size() != features_.dim()) {
    throw ValidationError("SoftmaxLinearPolicy: theta dimension does not match features");
  }
  if (!theta_.allFinite()) {
    throw ValidationError("SoftmaxLinearPolicy: theta must be finite");
  }
}

SoftmaxLinearPolicy SoftmaxLinearPolicy::with_theta(Eigen::VectorXd theta) const {
  return SoftmaxLinearPolicy(features_, std::move(theta));
}

Eigen::VectorXd SoftmaxLinearPolicy::logits(int state) const {
  const int a_count = features_.num_actions();
  Eigen::VectorXd l(a_count);
  for (int a = 0; a < a_count; ++a) l[a] = features_.row(state, a).dot(theta_);
  return l;
}

Eigen::VectorXd SoftmaxLinearPolicy::action_probabilities(int state) const {
  Eigen::VectorXd l = logits(state);
  const double m = l.maxCoeff();
  Eigen::VectorXd e = (l.array() - m).exp();
  return e / e.sum();
}

double SoftmaxLinearPolicy::log_prob(int state, int action) const {
  Eigen::VectorXd l = logits(state);
  const double m = l.maxCoeff();
  const double lse = std::log((l.array() - m).exp().sum());
  return l[action] - m - lse;
}

Eigen::VectorXd SoftmaxLinearPolicy::score(int state, int action) const {
  const Eigen::VectorXd probs = action_probabilities(state);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim());
  for (int a = 0; a < probs.size(); ++a) mean += probs[a] * features_.row(state, a);
  return features_.row(state, action) - mean;
}

double smoothness_constant(double r_max, double horizon, double score_bound,
                           double curvature_bound, double gamma) {
  if (!(gamma < 1.0)) throw ValidationError("smoothness_constant: requires gamma < 1");
  return r_max * horizon * (horizon * score_bound * score_bound + curvature_bound) /
         (1.0 - gamma);
}

double sigma_squared(double score_bound, double r_max, double gamma) {
  if (!(gamma < 1.0)) throw ValidationError("sigma_squared: requires gamma < 1");
  const double one_minus = 1.0 - gamma;
  return score_bound * score_bound * r_max * r_max / (one_minus * one_minus * one_minus *
                                                      one_minus);
}

AssumptionConstants assumption_constants(const SoftmaxLinearPolicy& policy, const Mdp& mdp) {
  AssumptionConstants out;
  const double max_phi = policy.features().max_abs_entry();
  // |score_i| = |phi_i - E_pi phi_i| <= 2 max|phi|; the mixed second partial
  // is -Cov_pi(phi_i, phi_j), bounded by max|phi|^2.
  out.score_bound = 2.0 * max_phi;
  out.curvature_bound = max_phi * max_phi;

  Rng rng(12345);
  const int dim = policy.dim();
  const int a_count = policy.num_actions();
  for (int trial = 0; trial < 129; ++trial) {
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(dim);
    if (trial > 0) {
      for (int i = 0; i < dim; ++i) theta[i] = rng.uniform(-3.0, 3.0);
    }
    const SoftmaxLinearPolicy probe = policy.with_theta(theta);
    for (int s = 0; s < mdp.num_states; ++s) {
      const Eigen::VectorXd probs = probe.action_probabilities(s);
      Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
      Eigen::MatrixXd second = Eigen::MatrixXd::Zero(dim, dim);
      for (int a = 0; a < a_count; ++a) {
        const Eigen::VectorXd phi = probe.features().row(s, a);
        mean += probs[a] * phi;
        second += probs[a] * phi * phi.transpose();
      }
      const Eigen::MatrixXd cov = second - mean * mean.transpose();
      out.grid_curvature_max = std::max(out.grid_curvature_max, cov.cwiseAbs().maxCoeff());
      for (int a = 0; a < a_count; ++a) {
        const Eigen::VectorXd sc = probe.features().row(s, a) - mean;
        out.grid_score_max = std::max(out.grid_score_max, sc.cwiseAbs().maxCoeff());
      }
    }
  }

  if (mdp.gamma < 1.0) {
    out.smoothness = smoothness_constant(mdp.r_max, static_cast<double>(mdp.h_max),
                                         out.score_bound, out.curvature_bound, mdp.gamma);
    out.deviation = std::sqrt(sigma_squared(out.score_bound, mdp.r_max, mdp.gamma));
  }
  return out;
}

Eigen::VectorXd sample_initial_theta(int dim, double lo, double hi, Rng& rng) {
  Eigen::VectorXd theta(dim);
  for (int i = 0; i < dim; ++i) theta[i] = rng.uniform(lo, hi);
  return theta;
}

}  // namespace mpo
