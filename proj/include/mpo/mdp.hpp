#pragma once

#include <cstdint>
#include <vector>

#include "mpo/rng.hpp"

namespace mpo {

class SoftmaxLinearPolicy;

struct Step {
  int state;
  int action;
  double reward;
};

// One sampled episode. `total_return` is the discounted return at the
// generating MDP's gamma; `truncated` marks episodes cut off at h_max.
struct Trajectory {
  std::vector<Step> steps;
  bool truncated = false;
  double total_return = 0.0;

  long horizon() const { return static_cast<long>(steps.size()); }
};

// Finite tabular MDP. States 0..num_states-1 are nonterminal; the
// distinguished absorbing index num_states is terminal and excluded from
// feature maps. Transition rows range over num_states+1 successors.
struct Mdp {
  int num_states = 0;
  int num_actions = 0;
  std::vector<double> transition;    // [(s*A + a)*(S+1) + s']
  std::vector<double> reward;        // [s*A + a]
  std::vector<double> initial_dist;  // [s]
  double gamma = 1.0;
  long h_max = 1000;
  double r_max = 1.0;

  int terminal_state() const { return num_states; }

  double trans(int s, int a, int next) const {
    return transition[static_cast<std::size_t>((s * num_actions + a) * (num_states + 1) + next)];
  }
  double& trans(int s, int a, int next) {
    return transition[static_cast<std::size_t>((s * num_actions + a) * (num_states + 1) + next)];
  }
  double rew(int s, int a) const { return reward[static_cast<std::size_t>(s * num_actions + a)]; }
  double& rew(int s, int a) { return reward[static_cast<std::size_t>(s * num_actions + a)]; }

  // Throws ValidationError when stochasticity, reward-bound or
  // initial-distribution invariants are violated (tolerance 1e-12).
  void validate() const;
};

struct StepResult {
  int next_state;
  double reward;
  bool done;
};

// Sample one transition. Throws std::out_of_range on invalid indices or a
// terminal `state`.
StepResult step(const Mdp& mdp, int state, int action, Rng& rng);

// Roll out one episode: s0 ~ initial_dist, a_t ~ policy, until terminal or
// h_max. Every transition is drawn via step(), in order, from `rng`.
Trajectory sample_trajectory(const Mdp& mdp, const SoftmaxLinearPolicy& policy, Rng& rng);

// Sum of gamma^t * r_{t+1} over the trajectory.
double discounted_return(const Trajectory& traj, double gamma);

// Three-state corridor where state 2 swaps the effect of left/right, reward
// -1 per step, start in state 0, terminal reached by `right` from state 2.
// Actions: 0 = left, 1 = right.
Mdp make_short_corridor(double gamma = 1.0, long h_max = 1000);

// Seeded random fixture: Dirichlet-like transition rows with an absorbing
// terminal taking at least 0.6 probability from every (s, a) so that
// enumeration tails at moderate caps are negligible; rewards uniform in
// [-1, 1].
Mdp make_random_mdp(int num_states, int num_actions, std::uint64_t seed, double gamma,
                    long h_max);

}  // namespace mpo
