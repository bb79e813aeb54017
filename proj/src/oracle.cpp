#include "mpo/oracle.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "mpo/errors.hpp"

namespace mpo {

namespace {

constexpr double kEnumerationNodeBudget = 1e7;
constexpr double kAliveMassFloor = 1e-16;

// Worst-case alive out-degree: actions times nonterminal successors. Paths
// into the terminal stop, so this is the growth rate of the search tree.
long max_branching(const Mdp& mdp) {
  long best = 1;
  for (int s = 0; s < mdp.num_states; ++s) {
    long out = 0;
    for (int a = 0; a < mdp.num_actions; ++a) {
      for (int n = 0; n < mdp.num_states; ++n) {
        if (mdp.trans(s, a, n) > 0.0) ++out;
      }
    }
    best = std::max(best, out);
  }
  return best;
}

void enumerate_dfs(const Mdp& mdp, const SoftmaxLinearPolicy& policy, long cap, int state,
                   double prob, Trajectory& prefix, double disc, double ret,
                   EnumeratedDistribution& out) {
  if (prefix.horizon() == cap) {
    out.tail_mass += prob;
    return;
  }
  const Eigen::VectorXd probs = policy.action_probabilities(state);
  for (int a = 0; a < mdp.num_actions; ++a) {
    const double pa = probs[a];
    if (pa == 0.0) continue;
    const double r = mdp.rew(state, a);
    for (int next = 0; next <= mdp.num_states; ++next) {
      const double pt = mdp.trans(state, a, next);
      if (pt == 0.0) continue;
      prefix.steps.push_back({state, a, r});
      const double p = prob * pa * pt;
      if (next == mdp.terminal_state()) {
        Trajectory done = prefix;
        done.total_return = ret + disc * r;
        out.entries.emplace_back(std::move(done), p);
      } else {
        enumerate_dfs(mdp, policy, cap, next, p, prefix, disc * mdp.gamma, ret + disc * r, out);
      }
      prefix.steps.pop_back();
    }
  }
}

// Per-state prefix aggregates: moments of (probability, score sum u,
// discounted return r) up to total degree two in u and r.
struct Agg {
  double m00 = 0.0;
  Eigen::VectorXd m10;  // u
  double m01 = 0.0;     // r
  double m02 = 0.0;     // r^2
  Eigen::VectorXd m11;  // u r
  Eigen::VectorXd m12;  // u r^2
  double m20 = 0.0;     // ||u||^2
  double m21 = 0.0;     // ||u||^2 r
  double m22 = 0.0;     // ||u||^2 r^2

  explicit Agg(int dim)
      : m10(Eigen::VectorXd::Zero(dim)),
        m11(Eigen::VectorXd::Zero(dim)),
        m12(Eigen::VectorXd::Zero(dim)) {}
};

}  // namespace

EnumeratedDistribution enumerate_trajectories(const Mdp& mdp, const SoftmaxLinearPolicy& policy,
                                              long horizon_cap) {
  if (horizon_cap < 1) throw ValidationError("enumerate_trajectories: cap must be >= 1");
  const long b = max_branching(mdp);
  if (b >= 2) {
    const double bound = static_cast<double>(horizon_cap) * std::log(static_cast<double>(b));
    if (bound > std::log(kEnumerationNodeBudget)) {
      throw CapacityError("enumerate_trajectories: branching " + std::to_string(b) + "^" +
                          std::to_string(horizon_cap) + " exceeds the 1e7 node budget (~" +
                          std::to_string(std::exp(bound)) + " paths)");
    }
  }
  EnumeratedDistribution out;
  out.horizon_cap = horizon_cap;
  Trajectory prefix;
  for (int s0 = 0; s0 < mdp.num_states; ++s0) {
    const double rho = mdp.initial_dist[s0];
    if (rho == 0.0) continue;
    enumerate_dfs(mdp, policy, horizon_cap, s0, rho, prefix, 1.0, 0.0, out);
  }
  return out;
}

TrajectoryMoments trajectory_moments(const Mdp& mdp, const SoftmaxLinearPolicy& sampling_policy,
                                     const std::function<Eigen::VectorXd(int, int)>& score_fn,
                                     long horizon_cap) {
  const int dim = score_fn(0, 0).size();
  const int S = mdp.num_states;
  const int A = mdp.num_actions;

  TrajectoryMoments res;
  res.grad_mean = Eigen::VectorXd::Zero(dim);
  res.score_sum_mean = Eigen::VectorXd::Zero(dim);
  res.grad_r2 = Eigen::VectorXd::Zero(dim);
  Agg done(dim);

  std::vector<Agg> alive(S, Agg(dim));
  for (int s = 0; s < S; ++s) alive[s].m00 = mdp.initial_dist[s];

  // Per-state policy and score tables are time-invariant.
  std::vector<Eigen::VectorXd> probs(S);
  std::vector<std::vector<Eigen::VectorXd>> scores(S, std::vector<Eigen::VectorXd>(A));
  for (int s = 0; s < S; ++s) {
    probs[s] = sampling_policy.action_probabilities(s);
    for (int a = 0; a < A; ++a) scores[s][a] = score_fn(s, a);
  }

  double disc = 1.0;
  for (long t = 0; t < horizon_cap; ++t) {
    double alive_mass = 0.0;
    for (const Agg& ag : alive) alive_mass += ag.m00;
    if (alive_mass < kAliveMassFloor) break;

    std::vector<Agg> next(S, Agg(dim));
    for (int s = 0; s < S; ++s) {
      const Agg& ag = alive[s];
      if (ag.m00 == 0.0 && ag.m20 == 0.0) continue;
      for (int a = 0; a < A; ++a) {
        const double pa = probs[s][a];
        if (pa == 0.0) continue;
        const Eigen::VectorXd& c = scores[s][a];
        const double rho = disc * mdp.rew(s, a);
        const double c2 = c.squaredNorm();

        // Moments after appending this step to every prefix at s.
        const double n00 = ag.m00;
        const Eigen::VectorXd n10 = ag.m10 + ag.m00 * c;
        const double n01 = ag.m01 + ag.m00 * rho;
        const double n02 = ag.m02 + 2.0 * rho * ag.m01 + rho * rho * ag.m00;
        const Eigen::VectorXd n11 = ag.m11 + rho * ag.m10 + (ag.m01 + rho * ag.m00) * c;
        const Eigen::VectorXd n12 =
            ag.m12 + 2.0 * rho * ag.m11 + rho * rho * ag.m10 + n02 * c;
        const double dot10 = ag.m10.dot(c);
        const double dot11 = ag.m11.dot(c);
        const double dot12 = ag.m12.dot(c);
        const double n20 = ag.m20 + 2.0 * dot10 + ag.m00 * c2;
        const double n21 =
            ag.m21 + rho * ag.m20 + 2.0 * dot11 + 2.0 * rho * dot10 + c2 * (ag.m01 + rho * ag.m00);
        const double n22 = ag.m22 + 2.0 * rho * ag.m21 + rho * rho * ag.m20 + 2.0 * dot12 +
                           4.0 * rho * dot11 + 2.0 * rho * rho * dot10 + c2 * n02;

        for (int nxt = 0; nxt <= S; ++nxt) {
          const double pt = mdp.trans(s, a, nxt);
          if (pt == 0.0) continue;
          const double w = pa * pt;
          Agg& dst = (nxt == S) ? done : next[nxt];
          dst.m00 += w * n00;
          dst.m10 += w * n10;
          dst.m01 += w * n01;
          dst.m02 += w * n02;
          dst.m11 += w * n11;
          dst.m12 += w * n12;
          dst.m20 += w * n20;
          dst.m21 += w * n21;
          dst.m22 += w * n22;
        }
      }
    }
    alive = std::move(next);
    disc *= mdp.gamma;
  }

  res.mass = done.m00;
  double remaining = 0.0;
  for (const Agg& ag : alive) remaining += ag.m00;
  res.tail = remaining;
  res.ret_mean = done.m01;
  res.ret_sq = done.m02;
  res.grad_mean = done.m11;
  res.score_sum_mean = done.m10;
  res.grad_sq = done.m22;
  res.grad_r2 = done.m12;
  res.score_sq = done.m20;
  res.score_sq_ret = done.m21;
  return res;
}

Eigen::VectorXd exact_gradient(const Mdp& mdp, const SoftmaxLinearPolicy& policy,
                               long horizon_cap) {
  auto score_fn = [&policy](int s, int a) { return policy.score(s, a); };
  return trajectory_moments(mdp, policy, score_fn, horizon_cap).grad_mean;
}

std::pair<double, double> enumeration_return(const Mdp& mdp, const SoftmaxLinearPolicy& policy,
                                             long horizon_cap) {
  auto score_fn = [&policy](int s, int a) { return policy.score(s, a); };
  const TrajectoryMoments m = trajectory_moments(mdp, policy, score_fn, horizon_cap);
  return {m.ret_mean, m.tail};
}

namespace {

double solve_value(const Mdp& mdp, const Eigen::MatrixXd& p_pi, const Eigen::VectorXd& r_pi) {
  const int S = mdp.num_states;
  if (mdp.gamma >= 1.0) {
    // The undiscounted system is solvable only for an absorbing chain;
    // estimate the spectral radius of P_pi by power iteration.
    Eigen::VectorXd v = Eigen::VectorXd::Ones(S);
    double ratio = 1.0;
    for (int it = 0; it < 600; ++it) {
      Eigen::VectorXd w = p_pi * v;
      const double n = w.norm();
      if (n == 0.0) {
        ratio = 0.0;
        break;
      }
      ratio = n / v.norm();
      v = w / n;
    }
    if (ratio >= 1.0 - 1e-10) {
      throw DivergenceError("exact_return: non-absorbing chain at gamma=1 (spectral radius ~" +
                            std::to_string(ratio) + ")");
    }
  }
  const Eigen::MatrixXd system =
      Eigen::MatrixXd::Identity(S, S) - mdp.gamma * p_pi;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  if (!lu.isInvertible()) {
    throw DivergenceError("exact_return: singular value system");
  }
  const Eigen::VectorXd value = lu.solve(r_pi);
  double j = 0.0;
  for (int s = 0; s < S; ++s) j += mdp.initial_dist[s] * value[s];
  return j;
}

}  // namespace

double exact_return(const Mdp& mdp, const SoftmaxLinearPolicy& policy) {
  const int S = mdp.num_states;
  Eigen::MatrixXd probs(S, mdp.num_actions);
  for (int s = 0; s < S; ++s) probs.row(s) = policy.action_probabilities(s).transpose();
  return exact_return_fixed(mdp, probs);
}

double exact_return_fixed(const Mdp& mdp, const Eigen::MatrixXd& action_probs) {
  const int S = mdp.num_states;
  const int A = mdp.num_actions;
  Eigen::MatrixXd p_pi = Eigen::MatrixXd::Zero(S, S);
  Eigen::VectorXd r_pi = Eigen::VectorXd::Zero(S);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      const double pa = action_probs(s, a);
      r_pi[s] += pa * mdp.rew(s, a);
      for (int n = 0; n < S; ++n) p_pi(s, n) += pa * mdp.trans(s, a, n);
    }
  }
  return solve_value(mdp, p_pi, r_pi);
}

Eigen::VectorXd finite_difference(const std::function<double(const Eigen::VectorXd&)>& objective,
                                  const Eigen::VectorXd& theta, double h) {
  if (!(h > 0.0)) throw ValidationError("finite_difference: h must be > 0");
  Eigen::VectorXd grad(theta.size());
  Eigen::VectorXd probe = theta;
  for (int i = 0; i < theta.size(); ++i) {
    probe[i] = theta[i] + h;
    const double hi = objective(probe);
    probe[i] = theta[i] - h;
    const double lo = objective(probe);
    probe[i] = theta[i];
    grad[i] = (hi - lo) / (2.0 * h);
  }
  return grad;
}

MomentResult estimator_moments(EstimatorKind kind, const Mdp& mdp, const FeatureMap& features,
                               const std::vector<Eigen::VectorXd>& thetas,
                               const std::vector<long>& batches, long horizon_cap) {
  if (thetas.empty() || thetas.size() != batches.size()) {
    throw ValidationError("estimator_moments: thetas and batches must align and be nonempty");
  }
  for (long b : batches) {
    if (b < 1) throw ValidationError("estimator_moments: batch sizes must be >= 1");
  }

  auto vanilla_stage = [&](const Eigen::VectorXd& theta) {
    const SoftmaxLinearPolicy policy(features, theta);
    auto score_fn = [&policy](int s, int a) { return policy.score(s, a); };
    return trajectory_moments(mdp, policy, score_fn, horizon_cap);
  };

  MomentResult out;
  if (kind == EstimatorKind::Vanilla) {
    if (thetas.size() != 1) {
      throw ValidationError("estimator_moments: Vanilla takes a single theta");
    }
    const TrajectoryMoments m = vanilla_stage(thetas[0]);
    out.mean = m.grad_mean;
    const double per_draw = m.grad_sq - (2.0 - m.mass) * m.grad_mean.squaredNorm();
    out.second_central_moment = per_draw / static_cast<double>(batches[0]);
    out.tail = m.tail;
    return out;
  }
  if (kind != EstimatorKind::VrmpoRecursive) {
    throw ValidationError("estimator_moments: supported kinds are Vanilla and VrmpoRecursive");
  }

  // Stage 0: batch mean at theta_0. Later stages add independent
  // corrections sampled under theta_t with score differences against
  // theta_{t-1}; variances of independent stages add.
  const TrajectoryMoments init = vanilla_stage(thetas[0]);
  out.mean = init.grad_mean;
  out.second_central_moment =
      (init.grad_sq - (2.0 - init.mass) * init.grad_mean.squaredNorm()) /
      static_cast<double>(batches[0]);
  out.tail = init.tail;
  for (std::size_t t = 1; t < thetas.size(); ++t) {
    const SoftmaxLinearPolicy now(features, thetas[t]);
    const SoftmaxLinearPolicy prev(features, thetas[t - 1]);
    auto diff_fn = [&now, &prev](int s, int a) {
      return Eigen::VectorXd(now.score(s, a) - prev.score(s, a));
    };
    const TrajectoryMoments m = trajectory_moments(mdp, now, diff_fn, horizon_cap);
    out.mean += m.grad_mean;
    const double per_draw = m.grad_sq - (2.0 - m.mass) * m.grad_mean.squaredNorm();
    out.second_central_moment += per_draw / static_cast<double>(batches[t]);
    out.tail = std::max(out.tail, m.tail);
  }
  return out;
}

std::vector<std::pair<double, double>> corridor_value_curve(const std::vector<double>& p_grid) {
  const Mdp corridor = make_short_corridor();
  std::vector<std::pair<double, double>> curve;
  curve.reserve(p_grid.size());
  for (double p : p_grid) {
    if (!(p > 0.0 && p < 1.0)) {
      throw DivergenceError("corridor_value_curve: value diverges at p=" + std::to_string(p));
    }
    Eigen::MatrixXd probs(3, 2);
    for (int s = 0; s < 3; ++s) {
      probs(s, 0) = 1.0 - p;  // left
      probs(s, 1) = p;        // right
    }
    curve.emplace_back(p, exact_return_fixed(corridor, probs));
  }
  return curve;
}

namespace {

double lipschitz_ratio_max(const Mdp& mdp, const FeatureMap& features, long cap,
                           const std::function<void(Rng&, Eigen::VectorXd&, Eigen::VectorXd&)>&
                               draw_pair,
                           int pairs, std::uint64_t seed) {
  Rng rng(seed);
  double best = 0.0;
  Eigen::VectorXd a(features.dim()), b(features.dim());
  for (int i = 0; i < pairs; ++i) {
    draw_pair(rng, a, b);
    const double dist = (a - b).norm();
    if (dist == 0.0) continue;
    const Eigen::VectorXd ga = exact_gradient(mdp, SoftmaxLinearPolicy(features, a), cap);
    const Eigen::VectorXd gb = exact_gradient(mdp, SoftmaxLinearPolicy(features, b), cap);
    best = std::max(best, (ga - gb).norm() / dist);
  }
  return best;
}

}  // namespace

double empirical_lipschitz(const Mdp& mdp, const FeatureMap& features, long horizon_cap,
                           double lo, double hi, int pairs, double step, std::uint64_t seed) {
  const int dim = features.dim();
  auto draw = [=](Rng& rng, Eigen::VectorXd& a, Eigen::VectorXd& b) {
    for (int i = 0; i < dim; ++i) a[i] = rng.uniform(lo, hi);
    Eigen::VectorXd dir(dim);
    double norm = 0.0;
    do {
      for (int i = 0; i < dim; ++i) dir[i] = rng.uniform(-1.0, 1.0);
      norm = dir.norm();
    } while (norm == 0.0);
    b = a + step * dir / norm;
  };
  return lipschitz_ratio_max(mdp, features, horizon_cap, draw, pairs, seed);
}

double empirical_lipschitz_on_segment(const Mdp& mdp, const FeatureMap& features,
                                      long horizon_cap, const Eigen::VectorXd& theta_a,
                                      const Eigen::VectorXd& theta_b, int pairs,
                                      std::uint64_t seed) {
  auto draw = [&](Rng& rng, Eigen::VectorXd& a, Eigen::VectorXd& b) {
    const double t1 = rng.uniform();
    const double t2 = rng.uniform();
    a = theta_a + t1 * (theta_b - theta_a);
    b = theta_a + t2 * (theta_b - theta_a);
  };
  return lipschitz_ratio_max(mdp, features, horizon_cap, draw, pairs, seed);
}

}  // namespace mpo
