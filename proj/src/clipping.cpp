#include "heavyclip/clipping.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace heavyclip {

namespace {

// The plain norm squares its entries, which overflows or underflows far
// from 1; fall back to the scaled algorithm there.
double robust_norm(const Vector& g) {
  const double n = g.norm();
  if (n > 1e-150 && n < 1e150) return n;
  return g.stableNorm();
}

}  // namespace

bool clip_in_place(Vector& g, double lambda) {
  if (!(lambda > 0.0)) throw InvalidArgument("clipping level must be positive");
  const double norm = robust_norm(g);
  if (!(norm > lambda)) return false;
  g *= lambda / norm;
  // Rounding can leave the norm an ulp above lambda.
  while (robust_norm(g) > lambda) g *= 1.0 - 0x1p-52;
  return true;
}

Vector clip(const Vector& g, double lambda) {
  Vector out = g;
  clip_in_place(out, lambda);
  return out;
}

ClippedEstimatorBounds clipped_estimator_bounds(double sigma2, double lambda, std::uint64_t m) {
  const auto md = static_cast<double>(m);
  return {2.0 * lambda, 4.0 * sigma2 / (md * lambda), 18.0 * sigma2 / md, 18.0 * sigma2 / md};
}

namespace {

double mean_and_se(const std::vector<double>& v, double& se) {
  const auto n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double e : v) mean += e;
  mean /= n;
  double ss = 0.0;
  for (double e : v) ss += (e - mean) * (e - mean);
  se = std::sqrt(ss / (n - 1.0) / n);
  return mean;
}

}  // namespace

ClippedEstimatorStats estimate_clipped_stats(const StochasticOracle& oracle, const Vector& x, double lambda,
                                             std::uint64_t m, std::uint64_t trials, RngStream& rng) {
  if (!(lambda > 0.0)) throw InvalidArgument("clipping level must be positive");
  if (m == 0) throw InvalidArgument("mini-batch size must be at least 1");
  if (trials < 1000) throw InvalidArgument("at least 1000 trials are required");
  const Vector grad = full_gradient(oracle, x);
  if (grad.norm() > lambda / 2.0) {
    throw InvalidArgument("precondition ||grad f(x)|| <= lambda/2 violated");
  }

  const auto n = x.size();
  const auto t_count = static_cast<Eigen::Index>(trials);
  Eigen::MatrixXd draws(n, t_count);
  Vector g(n);
  std::uint64_t active = 0;
  for (Eigen::Index t = 0; t < t_count; ++t) {
    RngStream draw_rng = rng.child(static_cast<std::uint64_t>(t));
    minibatch_gradient_into(oracle, x, m, draw_rng, g);
    if (clip_in_place(g, lambda)) ++active;
    draws.col(t) = g;
  }
  const Vector mean = draws.rowwise().mean();

  ClippedEstimatorStats s;
  s.lambda = lambda;
  s.m = m;
  s.samples_used = trials * m;
  s.clip_rate = static_cast<double>(active) / static_cast<double>(trials);
  s.bias_norm = (mean - grad).norm();

  std::vector<double> distortion(trials), spread(trials);
  for (Eigen::Index t = 0; t < t_count; ++t) {
    distortion[static_cast<std::size_t>(t)] = (draws.col(t) - grad).squaredNorm();
    const double dev2 = (draws.col(t) - mean).squaredNorm();
    spread[static_cast<std::size_t>(t)] = dev2;
    s.magnitude_max = std::max(s.magnitude_max, std::sqrt(dev2));
  }
  s.distortion_msq = mean_and_se(distortion, s.distortion_se);
  s.variance_msq = mean_and_se(spread, s.variance_se);
  s.bias_se = std::sqrt(s.variance_msq / static_cast<double>(trials));
  return s;
}

}  // namespace heavyclip
