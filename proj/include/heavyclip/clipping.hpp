#pragma once

#include <cstdint>

#include "heavyclip/core.hpp"

namespace heavyclip {

/// min{1, lambda/||g||} * g. The zero vector is its own clip and
/// lambda = +inf leaves g untouched. Norms beyond 1e+-150 are computed with
/// scaling, so huge or tiny gradients neither overflow nor vanish.
Vector clip(const Vector& g, double lambda);

/// In-place clip; returns true when the clip was active (||g|| > lambda).
bool clip_in_place(Vector& g, double lambda);

/// Monte-Carlo estimates of the clipped mini-batch estimator's statistics
/// at a point x, together with their standard errors.
struct ClippedEstimatorStats {
  /// max_j ||clip_j - mean(clip)||; never exceeds 2*lambda.
  double magnitude_max = 0.0;
  /// ||mean(clip) - grad f(x)||
  double bias_norm = 0.0;
  /// mean ||clip_j - grad f(x)||^2
  double distortion_msq = 0.0;
  /// mean ||clip_j - mean(clip)||^2
  double variance_msq = 0.0;
  double bias_se = 0.0;
  double distortion_se = 0.0;
  double variance_se = 0.0;
  double lambda = 0.0;
  std::uint64_t m = 1;
  std::uint64_t samples_used = 0;
  /// Fraction of draws where the clip was active.
  double clip_rate = 0.0;
};

/// Requires ||grad f(x)|| <= lambda/2 and trials >= 1000.
ClippedEstimatorStats estimate_clipped_stats(const StochasticOracle& oracle, const Vector& x, double lambda,
                                             std::uint64_t m, std::uint64_t trials, RngStream& rng);

/// Right-hand sides of the clipped-estimator bounds.
struct ClippedEstimatorBounds {
  double magnitude;   // 2 lambda
  double bias;        // 4 sigma^2 / (m lambda)
  double distortion;  // 18 sigma^2 / m
  double variance;    // 18 sigma^2 / m
};

ClippedEstimatorBounds clipped_estimator_bounds(double sigma2, double lambda, std::uint64_t m);

}  // namespace heavyclip
