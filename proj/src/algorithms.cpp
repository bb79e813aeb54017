#include "mpo/algorithms.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "mpo/errors.hpp"

namespace mpo {

namespace {

void append_violation(std::string& msg, const std::string& item) {
  if (!msg.empty()) msg += "; ";
  msg += item;
}

// Shared per-iteration bookkeeping. est_return is the mean sampled return of
// the batch consumed this iteration; oracle columns are evaluated at the
// post-update parameters.
class RunLogger {
 public:
  RunLogger(const Mdp& mdp, const FeatureMap& features, const AlgoConfig& config)
      : mdp_(mdp), features_(features), config_(config) {}

  void log(RunRecord& record, long iteration, long trajectories, double est_return,
           const Eigen::VectorXd& theta, long truncated_total, bool force) {
    if (!force && config_.log_every > 1 && iteration % config_.log_every != 0) return;
    RunRow row;
    row.iteration = iteration;
    row.trajectories = trajectories;
    row.est_return = est_return;
    row.theta_norm = theta.norm();
    row.truncated = truncated_total;
    if (config_.oracle_logging) {
      const SoftmaxLinearPolicy policy(features_, theta);
      try {
        row.exact_j = exact_return(mdp_, policy);
      } catch (const DivergenceError&) {
        row.exact_j = -std::numeric_limits<double>::infinity();
      }
      const Eigen::VectorXd grad = exact_gradient(mdp_, policy, mdp_.h_max);
      row.bregman_norm =
          bregman_gradient(config_.mirror, config_.alpha, grad, theta).norm();
    }
    record.rows.push_back(std::move(row));
  }

 private:
  const Mdp& mdp_;
  const FeatureMap& features_;
  const AlgoConfig& config_;
};

}  // namespace

void AlgoConfig::validate() const {
  std::string msg;
  if (!(alpha > 0.0)) append_violation(msg, "alpha must be > 0");
  if (episodes < 1 && (algorithm == Algorithm::Vpg || algorithm == Algorithm::Mpo)) {
    append_violation(msg, "episodes must be >= 1");
  }
  if (algorithm == Algorithm::Vrmpo || algorithm == Algorithm::SvrpgIs) {
    if (vrmpo.n1 < 1) append_violation(msg, "vrmpo.n1 must be >= 1");
    if (vrmpo.n2 < 1) append_violation(msg, "vrmpo.n2 must be >= 1");
    if (vrmpo.m < 2) append_violation(msg, "vrmpo.m must be >= 2");
    if (vrmpo.k < 1) append_violation(msg, "vrmpo.k must be >= 1");
  }
  if (!(gamma > 0.0 && gamma <= 1.0)) append_violation(msg, "gamma must be in (0, 1]");
  if (!(theta0_lo <= theta0_hi)) append_violation(msg, "theta0 range is empty");
  if (log_every < 1) append_violation(msg, "log_every must be >= 1");
  if (smoothness_l.has_value()) {
    if (!(*smoothness_l > 0.0)) append_violation(msg, "smoothness_l must be > 0");
    else if (!(alpha < mirror.zeta / *smoothness_l)) {
      append_violation(msg, "alpha must be < zeta / L for weighted output sampling");
    }
  }
  if (!msg.empty()) throw ValidationError("AlgoConfig: " + msg);
}

RunRecord run_vpg(const Mdp& mdp, const FeatureMap& features, const AlgoConfig& config,
                  std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  Eigen::VectorXd theta =
      sample_initial_theta(features.dim(), config.theta0_lo, config.theta0_hi, rng);
  RunRecord record;
  record.zeta = config.mirror.zeta;
  RunLogger logger(mdp, features, config);
  long truncated = 0;
  for (long k = 1; k <= config.episodes; ++k) {
    const SoftmaxLinearPolicy policy(features, theta);
    const Trajectory traj = sample_trajectory(mdp, policy, rng);
    if (traj.truncated) ++truncated;
    const Eigen::VectorXd g = vanilla_gradient(traj, policy, config.gamma);
    theta += config.alpha * g;  // plain ascent; the Euclidean mirror step
    logger.log(record, k, k, discounted_return(traj, config.gamma), theta, truncated,
               k == config.episodes);
  }
  record.final_theta = theta;
  record.output_index = config.episodes;
  record.output_rule = "last";
  record.total_trajectories = config.episodes;
  record.truncated_total = truncated;
  return record;
}

RunRecord run_mpo(const Mdp& mdp, const FeatureMap& features, const AlgoConfig& config,
                  std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  Eigen::VectorXd theta =
      sample_initial_theta(features.dim(), config.theta0_lo, config.theta0_hi, rng);
  RunRecord record;
  record.zeta = config.mirror.zeta;
  RunLogger logger(mdp, features, config);
  EstimatorState average = EstimatorState::mpo_average(features.dim());

  const bool weighted_output = config.smoothness_l.has_value();
  std::vector<Eigen::VectorXd> iterates;  // theta_1..theta_N, pre-update
  if (weighted_output) iterates.reserve(static_cast<std::size_t>(config.episodes));

  long truncated = 0;
  for (long k = 1; k <= config.episodes; ++k) {
    if (weighted_output) iterates.push_back(theta);
    const SoftmaxLinearPolicy policy(features, theta);
    const Trajectory traj = sample_trajectory(mdp, policy, rng);
    if (traj.truncated) ++truncated;
    average = mpo_absorb(average, vanilla_gradient(traj, policy, config.gamma));
    theta = prox_step(config.mirror, config.alpha, average.value, theta);
    logger.log(record, k, k, discounted_return(traj, config.gamma), theta, truncated,
               k == config.episodes);
  }

  if (weighted_output) {
    const std::vector<double> alphas(static_cast<std::size_t>(config.episodes), config.alpha);
    const std::size_t n = sample_output_index(alphas, config.mirror.zeta,
                                              *config.smoothness_l, rng);
    record.final_theta = iterates[n];
    record.output_index = static_cast<long>(n) + 1;
    record.output_rule = "sampled";
  } else {
    record.final_theta = theta;
    record.output_index = config.episodes;
    record.output_rule = "last";
  }
  record.total_trajectories = config.episodes;
  record.truncated_total = truncated;
  return record;
}

namespace {

// Epoch-structured loops shared by the recursive and importance-sampling
// estimators. `init` builds the anchor state from the outer batch; `update`
// folds one inner batch.
template <typename InitFn, typename UpdateFn>
RunRecord run_epochs(const Mdp& mdp, const FeatureMap& features, const AlgoConfig& config,
                     std::uint64_t seed, InitFn init, UpdateFn update) {
  config.validate();
  Rng rng(seed);
  Eigen::VectorXd theta_tilde =
      sample_initial_theta(features.dim(), config.theta0_lo, config.theta0_hi, rng);
  RunRecord record;
  record.zeta = config.mirror.zeta;
  RunLogger logger(mdp, features, config);

  const VrmpoParams& vp = config.vrmpo;
  long iteration = 0;
  long trajectories = 0;
  long truncated = 0;

  auto sample_batch = [&](const SoftmaxLinearPolicy& policy, long n) {
    std::vector<Trajectory> batch;
    batch.reserve(static_cast<std::size_t>(n));
    double ret_sum = 0.0;
    for (long i = 0; i < n; ++i) {
      batch.push_back(sample_trajectory(mdp, policy, rng));
      if (batch.back().truncated) ++truncated;
      ret_sum += discounted_return(batch.back(), config.gamma);
    }
    trajectories += n;
    return std::make_pair(std::move(batch), ret_sum / static_cast<double>(n));
  };

  for (long k = 1; k <= vp.k; ++k) {
    std::vector<Eigen::VectorXd> epoch_iterates;  // theta_{k,0} .. theta_{k,m}
    epoch_iterates.reserve(static_cast<std::size_t>(vp.m) + 1);
    Eigen::VectorXd theta = theta_tilde;
    epoch_iterates.push_back(theta);

    SoftmaxLinearPolicy policy(features, theta);
    auto [batch0, ret0] = sample_batch(policy, vp.n1);
    EstimatorState state = init(batch0, policy);

    // First step of the epoch is a plain gradient step unless the mirror
    // variant is requested.
    if (config.mirror_first_step) {
      theta = prox_step(config.mirror, config.alpha, state.value, theta);
    } else {
      theta += config.alpha * state.value;
    }
    epoch_iterates.push_back(theta);
    ++iteration;
    const bool last_update_of_run = (k == vp.k) && (vp.m - 1 < 1);
    logger.log(record, iteration, trajectories, ret0, theta, truncated, last_update_of_run);

    for (long t = 1; t <= vp.m - 1; ++t) {
      policy = SoftmaxLinearPolicy(features, theta);
      auto [batch, ret] = sample_batch(policy, vp.n2);
      state = update(state, batch, policy);
      theta = prox_step(config.mirror, config.alpha, state.value, theta);
      epoch_iterates.push_back(theta);
      ++iteration;
      logger.log(record, iteration, trajectories, ret, theta, truncated,
                 k == vp.k && t == vp.m - 1);
    }

    // Next epoch starts from a uniformly chosen iterate index in 0..m.
    long pick = rng.uniform_int(static_cast<int>(vp.m) + 1);
    if (pick >= static_cast<long>(epoch_iterates.size())) {
      pick = static_cast<long>(epoch_iterates.size()) - 1;
      ++record.output_clamp_events;
    }
    theta_tilde = epoch_iterates[static_cast<std::size_t>(pick)];
    record.output_index = pick;
  }

  record.final_theta = theta_tilde;
  record.output_rule = "epoch_uniform";
  record.total_trajectories = trajectories;
  record.truncated_total = truncated;
  return record;
}

}  // namespace

RunRecord run_vrmpo(const Mdp& mdp, const FeatureMap& features, const AlgoConfig& config,
                    std::uint64_t seed) {
  return run_epochs(
      mdp, features, config, seed,
      [&](const std::vector<Trajectory>& batch, const SoftmaxLinearPolicy& policy) {
        return vrmpo_init(batch, policy, config.gamma);
      },
      [&](const EstimatorState& state, const std::vector<Trajectory>& batch,
          const SoftmaxLinearPolicy& policy) {
        return vrmpo_recursive_update(state, batch, policy, config.gamma);
      });
}

RunRecord run_svrpg_is(const Mdp& mdp, const FeatureMap& features, const AlgoConfig& config,
                       std::uint64_t seed) {
  return run_epochs(
      mdp, features, config, seed,
      [&](const std::vector<Trajectory>& batch, const SoftmaxLinearPolicy& policy) {
        return svrpg_init(batch, policy, config.gamma);
      },
      [&](const EstimatorState& state, const std::vector<Trajectory>& batch,
          const SoftmaxLinearPolicy& policy) {
        return svrpg_is_update(state, batch, policy, config.gamma);
      });
}

RunRecord run_algorithm(const Mdp& mdp, const FeatureMap& features, const AlgoConfig& config,
                        std::uint64_t seed) {
  switch (config.algorithm) {
    case Algorithm::Vpg:
      return run_vpg(mdp, features, config, seed);
    case Algorithm::Mpo:
      return run_mpo(mdp, features, config, seed);
    case Algorithm::Vrmpo:
      return run_vrmpo(mdp, features, config, seed);
    case Algorithm::SvrpgIs:
      return run_svrpg_is(mdp, features, config, seed);
  }
  throw ValidationError("run_algorithm: unknown algorithm");
}

std::size_t sample_output_index(const std::vector<double>& step_sizes, double zeta, double L,
                                Rng& rng) {
  if (step_sizes.empty()) throw ValidationError("sample_output_index: empty step-size list");
  std::vector<double> weights(step_sizes.size());
  double total = 0.0;
  for (std::size_t k = 0; k < step_sizes.size(); ++k) {
    const double a = step_sizes[k];
    if (!(a > 0.0 && a < zeta / L)) {
      throw ValidationError("sample_output_index: require 0 < alpha_k < zeta/L; violated at k=" +
                            std::to_string(k) + " (alpha=" + std::to_string(a) +
                            ", zeta/L=" + std::to_string(zeta / L) + ")");
    }
    weights[k] = zeta * a - L * a * a;
    total += weights[k];
  }
  for (double& w : weights) w /= total;
  return static_cast<std::size_t>(rng.categorical({weights.data(), weights.size()}));
}

double half_zeta_over_l_step(double zeta, double L) {
  if (!(zeta > 0.0) || !(L > 0.0)) {
    throw ValidationError("half_zeta_over_l_step: zeta and L must be > 0");
  }
  return zeta / (2.0 * L);
}

VrmpoPrescription vrmpo_hyperparams(double epsilon, double sigma, double L, double zeta,
                                    double delta) {
  if (!(zeta > 5.0 / 32.0)) {
    throw ValidationError("vrmpo_hyperparams: requires zeta > 5/32");
  }
  if (!(epsilon > 0.0) || !(sigma > 0.0) || !(L > 0.0) || !(delta > 0.0)) {
    throw ValidationError("vrmpo_hyperparams: epsilon, sigma, L, delta must be > 0");
  }
  VrmpoPrescription out;
  const double margin = zeta - 5.0 / 32.0;
  out.c = 1.0 / (8.0 * L * zeta * zeta) +
          (1.0 + 1.0 / (32.0 * zeta * zeta)) / (2.0 * margin);
  out.n1_raw = out.c * sigma * sigma / (epsilon * epsilon);
  out.n2_raw = std::sqrt(out.c) * sigma / epsilon;
  out.n1 = static_cast<long>(std::ceil(out.n1_raw));
  out.n2 = static_cast<long>(std::ceil(out.n2_raw));
  out.m = out.n2 + 1;
  const double m_minus_one = static_cast<double>(out.m - 1);
  out.k_raw = 8.0 * L * delta * (1.0 + 1.0 / (16.0 * zeta * zeta)) /
              (m_minus_one * margin * epsilon * epsilon);
  out.k = static_cast<long>(std::ceil(out.k_raw));
  out.alpha = 1.0 / (4.0 * L);
  return out;
}

}  // namespace mpo
