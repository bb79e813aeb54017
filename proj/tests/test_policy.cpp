#include <cmath>

#include "doctest.h"

#include "mpo/mdp.hpp"
#include "mpo/oracle.hpp"
#include "mpo/policy.hpp"

using namespace mpo;

TEST_CASE("zero parameters give uniform action probabilities") {
  const FeatureMap features = FeatureMap::tabular(2, 3);
  const SoftmaxLinearPolicy policy(features, Eigen::VectorXd::Zero(6));
  for (int s = 0; s < 2; ++s) {
    const Eigen::VectorXd probs = policy.action_probabilities(s);
    for (int a = 0; a < 3; ++a) CHECK(probs[a] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  }
}

TEST_CASE("corridor features with theta=[ln 2, 0] select right with 2/3") {
  const FeatureMap features = FeatureMap::corridor_shared(3);
  Eigen::VectorXd theta(2);
  theta << std::log(2.0), 0.0;
  const SoftmaxLinearPolicy policy(features, theta);
  for (int s = 0; s < 3; ++s) {
    const Eigen::VectorXd probs = policy.action_probabilities(s);
    CHECK(probs[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));  // right
    CHECK(probs[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));  // left
  }
}

TEST_CASE("probabilities are positive and sum to one for random parameters") {
  const FeatureMap features = FeatureMap::tabular(3, 2);
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const SoftmaxLinearPolicy policy(features,
                                     sample_initial_theta(features.dim(), -20.0, 20.0, rng));
    for (int s = 0; s < 3; ++s) {
      const Eigen::VectorXd probs = policy.action_probabilities(s);
      CHECK(probs.sum() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(probs.minCoeff() > 0.0);
    }
  }
}

TEST_CASE("score of the uniform two-action case") {
  Eigen::MatrixXd rows(2, 2);
  rows << 1.0, 0.0,  // action 0 -> e1
          0.0, 1.0;  // action 1 -> e2
  const SoftmaxLinearPolicy policy(FeatureMap(rows, 2), Eigen::VectorXd::Zero(2));
  const Eigen::VectorXd sc = policy.score(0, 0);
  CHECK(sc[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(sc[1] == doctest::Approx(-0.5).epsilon(1e-14));
}

TEST_CASE("score matches central finite differences of log pi") {
  const FeatureMap features = FeatureMap::tabular(2, 3);
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::VectorXd theta = sample_initial_theta(features.dim(), -2.0, 2.0, rng);
    const int s = rng.uniform_int(2);
    const int a = rng.uniform_int(3);
    const SoftmaxLinearPolicy policy(features, theta);
    const Eigen::VectorXd analytic = policy.score(s, a);
    const Eigen::VectorXd numeric = finite_difference(
        [&](const Eigen::VectorXd& t) {
          return SoftmaxLinearPolicy(features, t).log_prob(s, a);
        },
        theta, 1e-5);
    CHECK((analytic - numeric).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("probability-weighted scores sum to zero") {
  const FeatureMap features = FeatureMap::tabular(3, 2);
  Rng rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const SoftmaxLinearPolicy policy(features,
                                     sample_initial_theta(features.dim(), -3.0, 3.0, rng));
    for (int s = 0; s < 3; ++s) {
      const Eigen::VectorXd probs = policy.action_probabilities(s);
      Eigen::VectorXd sum = Eigen::VectorXd::Zero(features.dim());
      for (int a = 0; a < 2; ++a) sum += probs[a] * policy.score(s, a);
      CHECK(sum.cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
}

TEST_CASE("adding a constant feature shift leaves probabilities unchanged") {
  Rng rng(53);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd rows(3, 2);
    for (int i = 0; i < rows.size(); ++i) rows.data()[i] = rng.uniform(-1.0, 1.0);
    Eigen::VectorXd shift(2);
    shift << rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0);
    Eigen::MatrixXd shifted = rows;
    shifted.rowwise() += shift.transpose();

    const Eigen::VectorXd theta = sample_initial_theta(2, -1.5, 1.5, rng);
    const SoftmaxLinearPolicy a(FeatureMap(rows, 3), theta);
    const SoftmaxLinearPolicy b(FeatureMap(shifted, 3), theta);
    CHECK((a.action_probabilities(0) - b.action_probabilities(0)).cwiseAbs().maxCoeff() <=
          1e-12);
  }
}

TEST_CASE("assumption constants: corridor score bound is at most 2") {
  const Mdp corridor = make_short_corridor();
  const SoftmaxLinearPolicy policy(FeatureMap::corridor_shared(3), Eigen::VectorXd::Zero(2));
  const AssumptionConstants constants = assumption_constants(policy, corridor);
  CHECK(constants.score_bound <= 2.0 + 1e-12);
  CHECK(constants.grid_score_max <= constants.score_bound + 1e-12);
  CHECK(constants.grid_curvature_max <= constants.curvature_bound + 1e-12);
  // gamma = 1: the closed forms are undefined.
  CHECK_FALSE(constants.smoothness.has_value());
  CHECK_FALSE(constants.deviation.has_value());
}

TEST_CASE("smoothness and deviation closed forms") {
  CHECK(smoothness_constant(1.0, 10.0, 1.0, 1.0, 0.9) == doctest::Approx(1100.0).epsilon(1e-12));
  CHECK(sigma_squared(1.0, 1.0, 0.9) == doctest::Approx(10000.0).epsilon(1e-9));
}

TEST_CASE("assumption constants are populated at gamma < 1") {
  const Mdp mdp = make_random_mdp(2, 2, 4, 0.9, 10);
  const SoftmaxLinearPolicy policy(FeatureMap::tabular(2, 2), Eigen::VectorXd::Zero(4));
  const AssumptionConstants constants = assumption_constants(policy, mdp);
  REQUIRE(constants.smoothness.has_value());
  REQUIRE(constants.deviation.has_value());
  CHECK(*constants.smoothness ==
        doctest::Approx(smoothness_constant(mdp.r_max, 10.0, constants.score_bound,
                                            constants.curvature_bound, 0.9)));
  CHECK(*constants.deviation ==
        doctest::Approx(std::sqrt(sigma_squared(constants.score_bound, mdp.r_max, 0.9))));
}

TEST_CASE("non-finite parameters are rejected") {
  const FeatureMap features = FeatureMap::tabular(1, 2);
  Eigen::VectorXd bad(2);
  bad << 1.0, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS(SoftmaxLinearPolicy(features, bad));
}
