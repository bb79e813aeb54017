#include "mpo/mirror.hpp"

#include <cmath>

#include "mpo/errors.hpp"

namespace mpo {

namespace {

// ||x||_p with max-scaling against overflow; 0 for the zero vector.
double pnorm(const Eigen::VectorXd& x, double p) {
  const double m = x.cwiseAbs().maxCoeff();
  if (m == 0.0) return 0.0;
  double sum = 0.0;
  for (int i = 0; i < x.size(); ++i) sum += std::pow(std::abs(x[i]) / m, p);
  return m * std::pow(sum, 1.0 / p);
}

// Shared form of both link functions: sign(x_j)|x_j|^{e-1} / ||x||_e^{e-2}.
Eigen::VectorXd link(const Eigen::VectorXd& x, double e) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(x.size());
  const double norm = pnorm(x, e);
  if (norm == 0.0) return out;  // the formula's 0/0 limit at the origin
  const double denom = std::pow(norm, e - 2.0);
  for (int i = 0; i < x.size(); ++i) {
    const double a = std::abs(x[i]);
    out[i] = (x[i] < 0.0 ? -1.0 : 1.0) * std::pow(a, e - 1.0) / denom;
    if (x[i] == 0.0) out[i] = 0.0;
  }
  return out;
}

}  // namespace

MirrorMap MirrorMap::euclidean() { return MirrorMap{}; }

MirrorMap MirrorMap::pnorm(double p, std::optional<double> zeta) {
  if (!(p > 1.0)) throw ValidationError("MirrorMap: p must be > 1");
  MirrorMap map;
  map.kind = Kind::PNorm;
  map.p = p;
  map.q = p / (p - 1.0);
  if (zeta.has_value()) {
    if (!(*zeta > 0.0)) throw ValidationError("MirrorMap: zeta must be > 0");
    map.zeta = *zeta;
  } else if (p <= 2.0) {
    map.zeta = p - 1.0;
  } else {
    map.zeta = 1.0;  // not strongly convex in l2 for p > 2; caller must judge
    map.zeta_defaulted = true;
  }
  return map;
}

double psi_value(const MirrorMap& map, const Eigen::VectorXd& x) {
  if (map.kind == MirrorMap::Kind::Euclidean) return 0.5 * x.squaredNorm();
  const double n = pnorm(x, map.p);
  return 0.5 * n * n;
}

Eigen::VectorXd grad_psi(const MirrorMap& map, const Eigen::VectorXd& x) {
  if (map.kind == MirrorMap::Kind::Euclidean) return x;
  return link(x, map.p);
}

Eigen::VectorXd grad_psi_star(const MirrorMap& map, const Eigen::VectorXd& y) {
  if (map.kind == MirrorMap::Kind::Euclidean) return y;
  return link(y, map.q);
}

double bregman_divergence(const MirrorMap& map, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& y) {
  if (map.kind == MirrorMap::Kind::Euclidean) return 0.5 * (x - y).squaredNorm();
  return psi_value(map, x) - psi_value(map, y) - grad_psi(map, y).dot(x - y);
}

Eigen::VectorXd prox_step(const MirrorMap& map, double alpha, const Eigen::VectorXd& g,
                          const Eigen::VectorXd& theta) {
  if (!(alpha > 0.0)) throw ValidationError("prox_step: alpha must be > 0");
  if (map.kind == MirrorMap::Kind::Euclidean) return theta + alpha * g;
  if (g.isZero(0.0)) return theta;  // divergence alone is minimized at theta
  return grad_psi_star(map, grad_psi(map, theta) + alpha * g);
}

Eigen::VectorXd bregman_gradient(const MirrorMap& map, double alpha, const Eigen::VectorXd& g,
                                 const Eigen::VectorXd& theta) {
  if (!(alpha > 0.0)) throw ValidationError("bregman_gradient: alpha must be > 0");
  if (map.kind == MirrorMap::Kind::Euclidean) return g;  // exact closed form
  return (prox_step(map, alpha, g, theta) - theta) / alpha;
}

}  // namespace mpo
