#include "mpo/mdp.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>

#include "mpo/errors.hpp"
#include "mpo/policy.hpp"

namespace mpo {

namespace {
constexpr double kStochasticTol = 1e-12;
}

void Mdp::validate() const {
  if (num_states < 1 || num_actions < 1) {
    throw ValidationError("Mdp: num_states and num_actions must be >= 1");
  }
  const std::size_t succ = static_cast<std::size_t>(num_states + 1);
  if (transition.size() != static_cast<std::size_t>(num_states * num_actions) * succ) {
    throw ValidationError("Mdp: transition tensor has wrong size");
  }
  if (reward.size() != static_cast<std::size_t>(num_states * num_actions)) {
    throw ValidationError("Mdp: reward table has wrong size");
  }
  if (initial_dist.size() != static_cast<std::size_t>(num_states)) {
    throw ValidationError("Mdp: initial distribution has wrong size");
  }
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw ValidationError("Mdp: gamma must be in (0, 1]");
  }
  if (h_max < 1) throw ValidationError("Mdp: h_max must be >= 1");
  for (int s = 0; s < num_states; ++s) {
    for (int a = 0; a < num_actions; ++a) {
      double sum = 0.0;
      for (int n = 0; n <= num_states; ++n) {
        const double p = trans(s, a, n);
        if (p < 0.0) throw ValidationError("Mdp: negative transition probability");
        sum += p;
      }
      if (std::abs(sum - 1.0) > kStochasticTol) {
        throw ValidationError("Mdp: transition row (" + std::to_string(s) + "," +
                              std::to_string(a) + ") sums to " + std::to_string(sum));
      }
      if (std::abs(rew(s, a)) > r_max) {
        throw ValidationError("Mdp: |reward| exceeds declared r_max at (" + std::to_string(s) +
                              "," + std::to_string(a) + ")");
      }
    }
  }
  const double rho_sum = std::accumulate(initial_dist.begin(), initial_dist.end(), 0.0);
  if (std::abs(rho_sum - 1.0) > kStochasticTol) {
    throw ValidationError("Mdp: initial distribution sums to " + std::to_string(rho_sum));
  }
}

StepResult step(const Mdp& mdp, int state, int action, Rng& rng) {
  if (state < 0 || state >= mdp.num_states) {
    throw std::out_of_range("step: state index " + std::to_string(state) + " out of range");
  }
  if (action < 0 || action >= mdp.num_actions) {
    throw std::out_of_range("step: action index " + std::to_string(action) + " out of range");
  }
  const double* row =
      mdp.transition.data() + static_cast<std::size_t>((state * mdp.num_actions + action)) *
                                  static_cast<std::size_t>(mdp.num_states + 1);
  const int next = rng.categorical({row, static_cast<std::size_t>(mdp.num_states + 1)});
  return {next, mdp.rew(state, action), next == mdp.terminal_state()};
}

Trajectory sample_trajectory(const Mdp& mdp, const SoftmaxLinearPolicy& policy, Rng& rng) {
  if (policy.features().num_state_action_pairs() != mdp.num_states * mdp.num_actions ||
      policy.num_actions() != mdp.num_actions) {
    throw ValidationError("sample_trajectory: policy feature map does not match the MDP");
  }
  Trajectory traj;
  int state = rng.categorical(
      {mdp.initial_dist.data(), static_cast<std::size_t>(mdp.num_states)});
  double ret = 0.0;
  double disc = 1.0;
  for (long t = 0; t < mdp.h_max; ++t) {
    const Eigen::VectorXd probs = policy.action_probabilities(state);
    const int action = rng.categorical({probs.data(), static_cast<std::size_t>(probs.size())});
    const StepResult res = step(mdp, state, action, rng);
    traj.steps.push_back({state, action, res.reward});
    ret += disc * res.reward;
    disc *= mdp.gamma;
    if (res.done) {
      traj.total_return = ret;
      return traj;
    }
    state = res.next_state;
  }
  traj.truncated = true;
  traj.total_return = ret;
  return traj;
}

double discounted_return(const Trajectory& traj, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw ValidationError("discounted_return: gamma must be in (0, 1]");
  }
  double ret = 0.0;
  double disc = 1.0;
  for (const Step& s : traj.steps) {
    ret += disc * s.reward;
    disc *= gamma;
  }
  return ret;
}

Mdp make_short_corridor(double gamma, long h_max) {
  Mdp mdp;
  mdp.num_states = 3;
  mdp.num_actions = 2;
  mdp.gamma = gamma;
  mdp.h_max = h_max;
  mdp.r_max = 1.0;
  mdp.transition.assign(3 * 2 * 4, 0.0);
  mdp.reward.assign(3 * 2, -1.0);
  mdp.initial_dist = {1.0, 0.0, 0.0};
  const int kLeft = 0, kRight = 1;
  mdp.trans(0, kLeft, 0) = 1.0;   // left in the first state causes no movement
  mdp.trans(0, kRight, 1) = 1.0;
  mdp.trans(1, kLeft, 2) = 1.0;   // state 1 swaps the two actions
  mdp.trans(1, kRight, 0) = 1.0;
  mdp.trans(2, kLeft, 1) = 1.0;
  mdp.trans(2, kRight, 3) = 1.0;  // terminal
  mdp.validate();
  return mdp;
}

Mdp make_random_mdp(int num_states, int num_actions, std::uint64_t seed, double gamma,
                    long h_max) {
  if (num_states < 1 || num_actions < 1) {
    throw ValidationError("make_random_mdp: num_states and num_actions must be >= 1");
  }
  Rng rng(seed);
  Mdp mdp;
  mdp.num_states = num_states;
  mdp.num_actions = num_actions;
  mdp.gamma = gamma;
  mdp.h_max = h_max;
  mdp.r_max = 1.0;
  mdp.transition.assign(static_cast<std::size_t>(num_states * num_actions) *
                            static_cast<std::size_t>(num_states + 1),
                        0.0);
  mdp.reward.assign(static_cast<std::size_t>(num_states * num_actions), 0.0);
  mdp.initial_dist.assign(static_cast<std::size_t>(num_states), 0.0);

  for (int s = 0; s < num_states; ++s) {
    for (int a = 0; a < num_actions; ++a) {
      // Terminal takes 0.6..0.85 so that tails at caps around 20 are ~1e-8.
      const double q = rng.uniform(0.6, 0.85);
      double total = 0.0;
      std::vector<double> w(static_cast<std::size_t>(num_states));
      for (double& wi : w) {
        wi = -std::log(1.0 - rng.uniform());  // exponential -> Dirichlet(1,..,1)
        total += wi;
      }
      for (int n = 0; n < num_states; ++n) mdp.trans(s, a, n) = (1.0 - q) * w[n] / total;
      mdp.trans(s, a, num_states) = q;
      // Renormalize the row exactly.
      double sum = 0.0;
      for (int n = 0; n <= num_states; ++n) sum += mdp.trans(s, a, n);
      for (int n = 0; n <= num_states; ++n) mdp.trans(s, a, n) /= sum;
      mdp.rew(s, a) = rng.uniform(-1.0, 1.0);
    }
  }
  double total = 0.0;
  std::vector<double> w(static_cast<std::size_t>(num_states));
  for (double& wi : w) {
    wi = -std::log(1.0 - rng.uniform());
    total += wi;
  }
  for (int s = 0; s < num_states; ++s) mdp.initial_dist[s] = w[s] / total;
  double rho_sum = std::accumulate(mdp.initial_dist.begin(), mdp.initial_dist.end(), 0.0);
  for (double& r : mdp.initial_dist) r /= rho_sum;
  mdp.validate();
  return mdp;
}

}  // namespace mpo
