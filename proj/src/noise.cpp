#include "heavyclip/noise.hpp"

#include <cmath>

namespace heavyclip {

namespace {

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

void check_unit_interval(double u) {
  if (!(u > 0.0 && u < 1.0)) throw InvalidArgument("inverse CDF argument must lie in (0, 1)");
}

}  // namespace

std::string_view to_string(NoiseFamily family) {
  switch (family) {
    case NoiseFamily::None: return "none";
    case NoiseFamily::Gaussian: return "gaussian";
    case NoiseFamily::Weibull: return "weibull";
    case NoiseFamily::BurrXII: return "burr";
  }
  return "unknown";
}

NoiseFamily noise_family_from_string(std::string_view name) {
  if (name == "none") return NoiseFamily::None;
  if (name == "gaussian" || name == "normal") return NoiseFamily::Gaussian;
  if (name == "weibull") return NoiseFamily::Weibull;
  if (name == "burr" || name == "burr12" || name == "burrxii") return NoiseFamily::BurrXII;
  throw InvalidArgument("unknown noise family '" + std::string(name) + "'");
}

double burr_moment(double c, double d, int r) {
  if (!(c > 0.0) || !(d > 0.0)) throw InvalidArgument("Burr XII parameters c and d must be positive");
  if (r < 1) throw InvalidArgument("moment order must be positive");
  if (!(c * d > r)) {
    throw InvalidArgument("Burr XII moment of order " + std::to_string(r) +
                          " does not exist (requires c*d > r)");
  }
  return d * std::exp(log_beta((c * d - r) / c, (c + r) / c));
}

double weibull_inverse_cdf(double c, double scale, double u) {
  check_unit_interval(u);
  if (!(c > 0.0) || !(scale > 0.0)) throw InvalidArgument("Weibull parameters must be positive");
  return scale * std::pow(-std::log1p(-u), 1.0 / c);
}

double burr_inverse_cdf(double c, double d, double u) {
  check_unit_interval(u);
  if (!(c > 0.0) || !(d > 0.0)) throw InvalidArgument("Burr XII parameters c and d must be positive");
  // (1-u)^(-1/d) - 1 computed without cancellation near u = 0.
  const double base = std::expm1(-std::log1p(-u) / d);
  return c == 1.0 ? base : std::pow(base, 1.0 / c);
}

NoiseModel::NoiseModel(NoiseFamily family, double c, double d, double scale, double shift)
    : family_(family), c_(c), d_(d), scale_(scale), shift_(shift) {}

NoiseModel NoiseModel::none() { return NoiseModel(NoiseFamily::None, 0.0, 0.0, 0.0, 0.0); }

NoiseModel NoiseModel::gaussian() { return NoiseModel(NoiseFamily::Gaussian, 0.0, 0.0, 1.0, 0.0); }

NoiseModel NoiseModel::weibull(double c) {
  if (!(c > 0.0)) throw InvalidArgument("Weibull shape c must be positive");
  const double g1 = std::tgamma(1.0 + 1.0 / c);
  const double g2 = std::tgamma(1.0 + 2.0 / c);
  const double scale = 1.0 / std::sqrt(g2 - g1 * g1);
  return NoiseModel(NoiseFamily::Weibull, c, 0.0, scale, -scale * g1);
}

NoiseModel NoiseModel::burr(double c, double d) {
  if (!(c > 0.0) || !(d > 0.0)) throw InvalidArgument("Burr XII parameters c and d must be positive");
  if (!(c * d > 2.0)) throw InvalidArgument("Burr XII variance does not exist (requires c*d > 2)");
  const double m1 = burr_moment(c, d, 1);
  const double m2 = burr_moment(c, d, 2);
  const double sd = std::sqrt(m2 - m1 * m1);
  return NoiseModel(NoiseFamily::BurrXII, c, d, 1.0 / sd, -m1 / sd);
}

NoiseModel NoiseModel::from_name(std::string_view name) {
  switch (noise_family_from_string(name)) {
    case NoiseFamily::None: return none();
    case NoiseFamily::Gaussian: return gaussian();
    case NoiseFamily::Weibull: return weibull();
    case NoiseFamily::BurrXII: return burr();
  }
  return none();
}

double NoiseModel::transform(double u) const {
  switch (family_) {
    case NoiseFamily::None: return 0.0;
    case NoiseFamily::Gaussian: return normal_quantile(u);
    case NoiseFamily::Weibull: return scale_ * weibull_inverse_cdf(c_, 1.0, u) + shift_;
    case NoiseFamily::BurrXII: return scale_ * burr_inverse_cdf(c_, d_, u) + shift_;
  }
  return 0.0;
}

double NoiseModel::sample_scalar(RngStream& rng) const {
  if (family_ == NoiseFamily::None) return 0.0;
  return transform(rng.uniform_open());
}

void NoiseModel::sample(RngStream& rng, std::span<double> out) const {
  for (double& v : out) v = sample_scalar(rng);
}

Vector NoiseModel::sample(std::size_t n, RngStream& rng) const {
  Vector v(static_cast<Eigen::Index>(n));
  sample(rng, std::span<double>(v.data(), n));
  return v;
}

double NoiseModel::cdf(double x) const {
  switch (family_) {
    case NoiseFamily::None: return x < 0.0 ? 0.0 : 1.0;
    case NoiseFamily::Gaussian: return normal_cdf(x);
    case NoiseFamily::Weibull: {
      const double y = (x - shift_) / scale_;
      return y <= 0.0 ? 0.0 : -std::expm1(-std::pow(y, c_));
    }
    case NoiseFamily::BurrXII: {
      const double y = (x - shift_) / scale_;
      return y <= 0.0 ? 0.0 : 1.0 - std::pow(1.0 + std::pow(y, c_), -d_);
    }
  }
  return 0.0;
}

double NoiseModel::tail_probability(double t) const {
  if (t < 0.0) return 1.0;
  switch (family_) {
    case NoiseFamily::None: return 0.0;
    case NoiseFamily::Gaussian: return std::erfc(t / std::sqrt(2.0));
    case NoiseFamily::Weibull: {
      const double upper = std::exp(-std::pow((t - shift_) / scale_, c_));
      return upper + cdf(-t);
    }
    case NoiseFamily::BurrXII: {
      const double upper = std::pow(1.0 + std::pow((t - shift_) / scale_, c_), -d_);
      return upper + cdf(-t);
    }
  }
  return 0.0;
}

Vector sample_noise(const NoiseModel& model, std::size_t n, RngStream& rng) { return model.sample(n, rng); }

}  // namespace heavyclip
