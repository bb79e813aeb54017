#pragma once

#include <optional>

#include <Eigen/Dense>

namespace mpo {

// Mirror-map geometry psi(x) = 1/2 ||x||_p^2 with conjugate exponent q,
// 1/p + 1/q = 1. Euclidean is the p = 2 case with exact closed forms.
// `zeta` is the strict-convexity constant used by step-size conditions and
// output sampling; for p > 2 the squared p-norm is not strongly convex in
// the Euclidean norm and zeta must be supplied (defaults to 1, flagged).
struct MirrorMap {
  enum class Kind { Euclidean, PNorm };

  Kind kind = Kind::Euclidean;
  double p = 2.0;
  double q = 2.0;
  double zeta = 1.0;
  bool zeta_defaulted = false;  // true when p > 2 and no zeta was supplied

  static MirrorMap euclidean();
  static MirrorMap pnorm(double p, std::optional<double> zeta = std::nullopt);
};

double psi_value(const MirrorMap& map, const Eigen::VectorXd& x);

// Link function: grad psi_j(x) = sign(x_j) |x_j|^{p-1} / ||x||_p^{p-2};
// zero maps to zero. Identity for the Euclidean map.
Eigen::VectorXd grad_psi(const MirrorMap& map, const Eigen::VectorXd& x);

// Conjugate link function with exponent q; inverse of grad_psi.
Eigen::VectorXd grad_psi_star(const MirrorMap& map, const Eigen::VectorXd& y);

// D_psi(x, y) = psi(x) - psi(y) - <grad psi(y), x - y>.
double bregman_divergence(const MirrorMap& map, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& y);

// argmin_w { <-g, w> + D_psi(w, theta) / alpha } via the closed-form link
// update grad_psi_star(grad_psi(theta) + alpha * g). `g` is an ascent
// direction; Euclidean reduces to theta + alpha * g. Throws on alpha <= 0.
Eigen::VectorXd prox_step(const MirrorMap& map, double alpha, const Eigen::VectorXd& g,
                          const Eigen::VectorXd& theta);

// Gradient mapping of the linearized objective, oriented so that the
// Euclidean case returns g itself: (prox_step(...) - theta) / alpha.
// Its norm is the stationarity measure used by the convergence criteria.
Eigen::VectorXd bregman_gradient(const MirrorMap& map, double alpha, const Eigen::VectorXd& g,
                                 const Eigen::VectorXd& theta);

}  // namespace mpo
