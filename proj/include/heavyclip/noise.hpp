#pragma once

#include <span>
#include <string>
#include <string_view>

#include "heavyclip/core.hpp"

namespace heavyclip {

enum class NoiseFamily { None, Gaussian, Weibull, BurrXII };

std::string_view to_string(NoiseFamily family);
NoiseFamily noise_family_from_string(std::string_view name);

/// r-th raw moment of Burr Type XII(c, d): d * B((cd - r)/c, (c + r)/c).
/// Throws InvalidArgument when the moment does not exist (cd <= r).
double burr_moment(double c, double d, int r);

/// Raw (unstandardized) inverse CDFs; u must lie in (0, 1).
double weibull_inverse_cdf(double c, double scale, double u);
double burr_inverse_cdf(double c, double d, double u);

/// Zero-mean, unit-variance i.i.d. coordinates drawn from a shifted and
/// scaled Gaussian, Weibull or Burr XII law.
///
/// Weibull uses the scale 1/sqrt(G(1+2/c) - G(1+1/c)^2) and the shift
/// -scale*G(1+1/c). Burr XII is centred by its first moment and divided by
/// its standard deviation.
class NoiseModel {
 public:
  static NoiseModel none();
  static NoiseModel gaussian();
  static NoiseModel weibull(double c = 0.2);
  static NoiseModel burr(double c = 1.0, double d = 2.3);
  static NoiseModel from_name(std::string_view name);

  NoiseFamily family() const { return family_; }
  double shape_c() const { return c_; }
  double shape_d() const { return d_; }
  /// Multiplier applied to the raw draw before the shift.
  double scale() const { return scale_; }
  /// Additive shift applied after scaling.
  double shift() const { return shift_; }
  /// Per-coordinate variance: 1, or 0 for the `none` model.
  double coordinate_variance() const { return family_ == NoiseFamily::None ? 0.0 : 1.0; }

  /// One standardized coordinate from a uniform u in (0, 1).
  double transform(double u) const;
  double sample_scalar(RngStream& rng) const;
  void sample(RngStream& rng, std::span<double> out) const;
  Vector sample(std::size_t n, RngStream& rng) const;

  /// Analytic CDF of one standardized coordinate.
  double cdf(double x) const;
  /// Analytic P(|X| > t) for one standardized coordinate.
  double tail_probability(double t) const;

 private:
  NoiseModel(NoiseFamily family, double c, double d, double scale, double shift);

  NoiseFamily family_;
  double c_;
  double d_;
  double scale_;
  double shift_;
};

/// Convenience wrapper for `NoiseModel::sample(n, rng)`.
Vector sample_noise(const NoiseModel& model, std::size_t n, RngStream& rng);

}  // namespace heavyclip
