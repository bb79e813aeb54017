#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mpo/estimators.hpp"
#include "mpo/mdp.hpp"
#include "mpo/mirror.hpp"
#include "mpo/oracle.hpp"
#include "mpo/policy.hpp"
#include "mpo/rng.hpp"

namespace mpo {

enum class Algorithm { Vpg, Mpo, Vrmpo, SvrpgIs };

struct VrmpoParams {
  long n1 = 1;  // outer batch
  long n2 = 1;  // inner batch
  long m = 2;   // inner iterations + 1
  long k = 1;   // epochs
};

struct AlgoConfig {
  Algorithm algorithm = Algorithm::Mpo;
  MirrorMap mirror = MirrorMap::euclidean();
  double alpha = 0.01;
  long episodes = 1000;  // Vpg / Mpo
  VrmpoParams vrmpo;
  double gamma = 1.0;
  double theta0_lo = -0.5;
  double theta0_hi = 0.5;
  std::optional<double> smoothness_l;  // enables weighted output sampling
  bool mirror_first_step = false;      // mirror variant of the plain first epoch step
  long log_every = 1;
  bool oracle_logging = false;

  void validate() const;  // throws ValidationError listing violations
};

struct RunRow {
  long iteration = 0;      // parameter updates so far, 1-based
  long trajectories = 0;   // cumulative episodes consumed
  double est_return = 0.0; // mean sampled return of this iteration's batch
  std::optional<double> exact_j;       // oracle value at the post-update theta
  std::optional<double> bregman_norm;  // ||gradient mapping|| at exact gradient
  double theta_norm = 0.0;
  long truncated = 0;  // cumulative truncated episodes
};

struct RunRecord {
  std::vector<RunRow> rows;
  Eigen::VectorXd final_theta;
  long output_index = 0;
  std::string output_rule;  // "last", "sampled", or "epoch_uniform"
  long total_trajectories = 0;
  long truncated_total = 0;
  long output_clamp_events = 0;
  double zeta = 1.0;  // geometry constant in force, recorded per run
};

RunRecord run_vpg(const Mdp& mdp, const FeatureMap& features, const AlgoConfig& config,
                  std::uint64_t seed);

// Per episode: sample, absorb into the running mean, mirror step with the
// averaged ascent estimate. Output is the last iterate unless a finite
// smoothness constant enables weighted output sampling.
RunRecord run_mpo(const Mdp& mdp, const FeatureMap& features, const AlgoConfig& config,
                  std::uint64_t seed);

// Epoch structure: batch initialization, one plain (non-mirror) step, then
// m-1 recursive inner updates through the mirror map; the next epoch starts
// from a uniformly chosen iterate of the current one.
RunRecord run_vrmpo(const Mdp& mdp, const FeatureMap& features, const AlgoConfig& config,
                    std::uint64_t seed);

// Importance-sampling baseline with the same epoch structure as run_vrmpo.
RunRecord run_svrpg_is(const Mdp& mdp, const FeatureMap& features, const AlgoConfig& config,
                       std::uint64_t seed);

RunRecord run_algorithm(const Mdp& mdp, const FeatureMap& features, const AlgoConfig& config,
                        std::uint64_t seed);

// Draw an output index with probability proportional to
// zeta * alpha_n - L * alpha_n^2. Requires 0 < alpha_n < zeta / L for every
// n; a violation names the offending index.
std::size_t sample_output_index(const std::vector<double>& step_sizes, double zeta, double L,
                                Rng& rng);

// Constant step size zeta / (2 L), the rate-optimal choice for the averaged
// estimator under a known smoothness constant.
double half_zeta_over_l_step(double zeta, double L);

// Batch plan meeting a target stationarity epsilon. Raw (pre-ceiling)
// values are kept for exact scaling checks.
struct VrmpoPrescription {
  double c = 0.0;  // shared constant of the closed forms
  double n1_raw = 0.0;
  double n2_raw = 0.0;
  double k_raw = 0.0;
  long n1 = 0;
  long n2 = 0;
  long m = 0;
  long k = 0;
  double alpha = 0.0;
};

// C = 1/(8 L zeta^2) + (1 + 1/(32 zeta^2)) / (2 (zeta - 5/32));
// N1 = ceil(C sigma^2 / eps^2), N2 = m - 1 = ceil(sqrt(C) sigma / eps),
// K = ceil(8 L delta (1 + 1/(16 zeta^2)) / ((m-1)(zeta - 5/32) eps^2)),
// alpha = 1/(4 L). Requires zeta > 5/32.
VrmpoPrescription vrmpo_hyperparams(double epsilon, double sigma, double L, double zeta,
                                    double delta);

}  // namespace mpo
