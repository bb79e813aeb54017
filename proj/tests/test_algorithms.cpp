#include <cmath>
#include <map>

#include "doctest.h"

#include "mpo/algorithms.hpp"
#include "mpo/errors.hpp"
#include "mpo/harness.hpp"

using namespace mpo;

namespace {

AlgoConfig corridor_mpo_config(double alpha, long episodes) {
  AlgoConfig cfg;
  cfg.algorithm = Algorithm::Mpo;
  cfg.mirror = MirrorMap::euclidean();
  cfg.alpha = alpha;
  cfg.episodes = episodes;
  cfg.gamma = 1.0;
  cfg.log_every = 1;
  return cfg;
}

double corridor_p_right(const Eigen::VectorXd& theta) {
  return 1.0 / (1.0 + std::exp(-(theta[0] - theta[1])));
}

}  // namespace

TEST_CASE("vpg leaves parameters unchanged on zero rewards") {
  Mdp mdp = make_random_mdp(2, 2, 5, 0.9, 15);
  for (double& r : mdp.reward) r = 0.0;
  const FeatureMap features = FeatureMap::tabular(2, 2);
  AlgoConfig cfg;
  cfg.algorithm = Algorithm::Vpg;
  cfg.alpha = 0.1;
  cfg.episodes = 25;
  cfg.gamma = mdp.gamma;
  const RunRecord rec = run_vpg(mdp, features, cfg, 17);

  Rng rng(17);
  const Eigen::VectorXd theta0 = sample_initial_theta(4, cfg.theta0_lo, cfg.theta0_hi, rng);
  CHECK((rec.final_theta - theta0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("a single vpg step equals the Euclidean prox step") {
  const Mdp corridor = make_short_corridor();
  const FeatureMap features = FeatureMap::corridor_shared(3);
  AlgoConfig cfg = corridor_mpo_config(0.05, 1);
  cfg.algorithm = Algorithm::Vpg;
  const RunRecord rec = run_vpg(corridor, features, cfg, 23);

  // Reproduce the same episode by replaying the seed.
  Rng rng(23);
  const Eigen::VectorXd theta0 = sample_initial_theta(2, -0.5, 0.5, rng);
  const SoftmaxLinearPolicy policy(features, theta0);
  const Trajectory traj = sample_trajectory(corridor, policy, rng);
  const Eigen::VectorXd g = vanilla_gradient(traj, policy, 1.0);
  const Eigen::VectorXd expected = prox_step(MirrorMap::euclidean(), 0.05, g, theta0);
  CHECK((rec.final_theta - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mpo first step equals a vpg step") {
  const Mdp corridor = make_short_corridor();
  const FeatureMap features = FeatureMap::corridor_shared(3);
  AlgoConfig mpo_cfg = corridor_mpo_config(0.05, 1);
  AlgoConfig vpg_cfg = mpo_cfg;
  vpg_cfg.algorithm = Algorithm::Vpg;
  const RunRecord a = run_mpo(corridor, features, mpo_cfg, 29);
  const RunRecord b = run_vpg(corridor, features, vpg_cfg, 29);
  CHECK((a.final_theta - b.final_theta).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("runs replay bit-for-bit from the same seed") {
  const Mdp corridor = make_short_corridor();
  const FeatureMap features = FeatureMap::corridor_shared(3);
  const AlgoConfig cfg = corridor_mpo_config(1e-4, 400);

  const RunRecord a = run_mpo(corridor, features, cfg, 31);
  const RunRecord b = run_mpo(corridor, features, cfg, 31);
  REQUIRE(a.rows.size() == b.rows.size());
  CHECK((a.final_theta - b.final_theta).cwiseAbs().maxCoeff() == 0.0);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].est_return == b.rows[i].est_return);
    CHECK(a.rows[i].theta_norm == b.rows[i].theta_norm);
    CHECK(a.rows[i].trajectories == b.rows[i].trajectories);
  }
  const RunRecord c = run_mpo(corridor, features, cfg, 32);
  CHECK((a.final_theta - c.final_theta).cwiseAbs().maxCoeff() != 0.0);
}

TEST_CASE("vrmpo is deterministic and accounts for every trajectory") {
  const Mdp mdp = make_random_mdp(2, 2, 1, 0.95, 20);
  const FeatureMap features = FeatureMap::tabular(2, 2);
  AlgoConfig cfg;
  cfg.algorithm = Algorithm::Vrmpo;
  cfg.alpha = 0.02;
  cfg.gamma = 0.95;
  cfg.vrmpo = {5, 3, 4, 6};  // n1, n2, m, k
  const RunRecord a = run_vrmpo(mdp, features, cfg, 37);
  const RunRecord b = run_vrmpo(mdp, features, cfg, 37);
  CHECK((a.final_theta - b.final_theta).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.total_trajectories == cfg.vrmpo.k * (cfg.vrmpo.n1 + (cfg.vrmpo.m - 1) * cfg.vrmpo.n2));
  CHECK(a.output_rule == "epoch_uniform");
  CHECK(a.output_clamp_events == 0);
  long prev_traj = 0;
  for (const RunRow& row : a.rows) {
    CHECK(row.trajectories >= prev_traj);
    prev_traj = row.trajectories;
  }
}

TEST_CASE("vrmpo with zero rewards keeps the start point across epochs") {
  Mdp mdp = make_random_mdp(2, 2, 5, 0.9, 15);
  for (double& r : mdp.reward) r = 0.0;
  const FeatureMap features = FeatureMap::tabular(2, 2);
  AlgoConfig cfg;
  cfg.algorithm = Algorithm::Vrmpo;
  cfg.alpha = 0.05;
  cfg.gamma = 0.9;
  cfg.vrmpo = {2, 2, 3, 4};
  const RunRecord rec = run_vrmpo(mdp, features, cfg, 41);
  Rng rng(41);
  const Eigen::VectorXd theta0 = sample_initial_theta(4, -0.5, 0.5, rng);
  CHECK((rec.final_theta - theta0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("svrpg baseline runs deterministically") {
  const Mdp mdp = make_random_mdp(2, 2, 2, 0.95, 20);
  const FeatureMap features = FeatureMap::tabular(2, 2);
  AlgoConfig cfg;
  cfg.algorithm = Algorithm::SvrpgIs;
  cfg.alpha = 0.02;
  cfg.gamma = 0.95;
  cfg.vrmpo = {4, 2, 3, 5};
  const RunRecord a = run_svrpg_is(mdp, features, cfg, 43);
  const RunRecord b = run_svrpg_is(mdp, features, cfg, 43);
  CHECK((a.final_theta - b.final_theta).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.total_trajectories == 5 * (4 + 2 * 2));
}

TEST_CASE("output sampling: constant steps are uniform, weights match closed form") {
  Rng rng(47);
  SUBCASE("hand-computed weights") {
    // zeta=1, L=1, alphas {0.5, 0.25}: weights {0.25, 0.1875},
    // probabilities {4/7, 3/7}.
    const std::vector<double> alphas = {0.5, 0.25};
    int first = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      if (sample_output_index(alphas, 1.0, 1.0, rng) == 0) ++first;
    }
    const double p0 = 0.25 / 0.4375;
    const double se = std::sqrt(p0 * (1.0 - p0) / n);
    CHECK(std::abs(static_cast<double>(first) / n - p0) <= 3.0 * se);
  }
  SUBCASE("constant steps") {
    const std::vector<double> alphas(4, 0.1);
    std::map<std::size_t, int> counts;
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++counts[sample_output_index(alphas, 1.0, 1.0, rng)];
    for (const auto& [idx, c] : counts) {
      const double se = std::sqrt(0.25 * 0.75 / n);
      CHECK(std::abs(static_cast<double>(c) / n - 0.25) <= 3.0 * se);
    }
  }
  SUBCASE("violations name the offending index") {
    const std::vector<double> alphas = {0.1, 0.9};
    try {
      sample_output_index(alphas, 0.5, 1.0, rng);
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("k=1") != std::string::npos);
    }
  }
}

TEST_CASE("batch plan closed forms") {
  const VrmpoPrescription plan = vrmpo_hyperparams(0.1, 1.0, 1.0, 1.0, 1.0);
  CHECK(plan.c == doctest::Approx(0.125 + (16.0 / 27.0) * (33.0 / 32.0)).epsilon(1e-12));
  CHECK(plan.n1 == 74);
  CHECK(plan.n2 == 9);
  CHECK(plan.m == 10);
  CHECK(plan.alpha == doctest::Approx(0.25).epsilon(1e-15));

  const VrmpoPrescription fine = vrmpo_hyperparams(0.05, 1.0, 1.0, 1.0, 1.0);
  CHECK(fine.n1_raw == doctest::Approx(4.0 * plan.n1_raw).epsilon(1e-12));
  CHECK(fine.n2_raw == doctest::Approx(2.0 * plan.n2_raw).epsilon(1e-12));

  CHECK_THROWS_AS(vrmpo_hyperparams(0.1, 1.0, 1.0, 5.0 / 32.0, 1.0), ValidationError);
  CHECK_THROWS_AS(vrmpo_hyperparams(-0.1, 1.0, 1.0, 1.0, 1.0), ValidationError);
}

TEST_CASE("half-zeta-over-L preset") {
  CHECK(half_zeta_over_l_step(1.0, 2.0) == doctest::Approx(0.25));
  CHECK_THROWS_AS(half_zeta_over_l_step(0.0, 1.0), ValidationError);
}

TEST_CASE("mpo weighted output sampling picks a visited iterate") {
  const Mdp mdp = make_random_mdp(2, 2, 1, 0.95, 20);
  const FeatureMap features = FeatureMap::tabular(2, 2);
  AlgoConfig cfg;
  cfg.algorithm = Algorithm::Mpo;
  cfg.alpha = 0.05;
  cfg.episodes = 50;
  cfg.gamma = 0.95;
  cfg.smoothness_l = 4.0;  // alpha < zeta / L = 0.25
  const RunRecord rec = run_mpo(mdp, features, cfg, 53);
  CHECK(rec.output_rule == "sampled");
  CHECK(rec.output_index >= 1);
  CHECK(rec.output_index <= 50);

  AlgoConfig no_l = cfg;
  no_l.smoothness_l.reset();
  const RunRecord last = run_mpo(mdp, features, no_l, 53);
  CHECK(last.output_rule == "last");
}

TEST_CASE("mpo learns the corridor at a stable step size") {
  const Mdp corridor = make_short_corridor();
  const FeatureMap features = FeatureMap::corridor_shared(3);
  const AlgoConfig cfg = corridor_mpo_config(1e-4, 10000);

  int in_window = 0;
  double mean_j = 0.0;
  for (long seed = 1; seed <= 10; ++seed) {
    const RunRecord rec = run_mpo(corridor, features, cfg, static_cast<std::uint64_t>(seed));
    const double p = corridor_p_right(rec.final_theta);
    if (p >= 0.45 && p <= 0.70) ++in_window;
    mean_j += exact_return(corridor, SoftmaxLinearPolicy(features, rec.final_theta));
  }
  mean_j /= 10.0;
  CHECK(mean_j >= -14.0);
  CHECK(std::abs(mean_j - (-11.6)) <= 1.5);
  CHECK(in_window >= 8);
}

TEST_CASE("vpg mean value improves over the first 500 episodes") {
  const Mdp corridor = make_short_corridor();
  const FeatureMap features = FeatureMap::corridor_shared(3);
  AlgoConfig cfg = corridor_mpo_config(2e-4, 500);
  cfg.algorithm = Algorithm::Vpg;
  cfg.oracle_logging = true;
  cfg.log_every = 5;

  // Smoothed trend: mean exact value over the first and last 100 episodes
  // (20 logged rows each), averaged across seeds.
  double first = 0.0, last = 0.0;
  for (long seed = 1; seed <= 10; ++seed) {
    const RunRecord rec = run_vpg(corridor, features, cfg, static_cast<std::uint64_t>(seed));
    REQUIRE(rec.rows.size() == 100);
    for (int i = 0; i < 20; ++i) {
      first += rec.rows[static_cast<std::size_t>(i)].exact_j.value();
      last += rec.rows[rec.rows.size() - 20 + static_cast<std::size_t>(i)].exact_j.value();
    }
  }
  CHECK(last / 200.0 > first / 200.0);
}

TEST_CASE("mpo smoothed exact value does not regress across the run") {
  const Mdp corridor = make_short_corridor();
  const FeatureMap features = FeatureMap::corridor_shared(3);
  AlgoConfig cfg = corridor_mpo_config(5e-5, 10000);
  cfg.oracle_logging = true;
  cfg.log_every = 10;

  int ok = 0;
  for (long seed = 1; seed <= 10; ++seed) {
    const RunRecord rec = run_mpo(corridor, features, cfg, static_cast<std::uint64_t>(seed));
    // Windows of 200 episodes = 20 logged rows at log_every 10.
    double first = 0.0, last = 0.0;
    for (int i = 0; i < 20; ++i) {
      first += rec.rows[static_cast<std::size_t>(i)].exact_j.value();
      last += rec.rows[rec.rows.size() - 20 + static_cast<std::size_t>(i)].exact_j.value();
    }
    if (last >= first) ++ok;
  }
  CHECK(ok >= 8);
}

TEST_CASE("minimum logged stationarity of an mpo run does not exceed the first row") {
  const Mdp mdp = make_random_mdp(2, 2, 1, 0.95, 20);
  const FeatureMap features = FeatureMap::tabular(2, 2);
  AlgoConfig cfg;
  cfg.algorithm = Algorithm::Mpo;
  cfg.alpha = 0.01;
  cfg.episodes = 2000;
  cfg.gamma = 0.95;
  cfg.oracle_logging = true;
  cfg.log_every = 20;
  const RunRecord rec = run_mpo(mdp, features, cfg, 59);
  double min_norm = 1e300;
  for (const RunRow& row : rec.rows) min_norm = std::min(min_norm, row.bregman_norm.value());
  CHECK(min_norm <= rec.rows.front().bregman_norm.value());
}

TEST_CASE("config validation lists violations") {
  AlgoConfig cfg;
  cfg.alpha = -1.0;
  cfg.gamma = 2.0;
  cfg.log_every = 0;
  try {
    cfg.validate();
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("alpha") != std::string::npos);
    CHECK(msg.find("gamma") != std::string::npos);
    CHECK(msg.find("log_every") != std::string::npos);
  }
}

TEST_CASE("weighted output sampling requires alpha below zeta over L") {
  AlgoConfig cfg;
  cfg.alpha = 0.5;
  cfg.smoothness_l = 4.0;  // zeta / L = 0.25 < alpha
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg.alpha = 0.2;
  CHECK_NOTHROW(cfg.validate());
}
