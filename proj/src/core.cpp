#include "heavyclip/core.hpp"

#include <cmath>
#include <limits>

namespace heavyclip {

DimensionMismatch::DimensionMismatch(std::size_t expected, std::size_t got)
    : InvalidArgument("dimension mismatch: expected " + std::to_string(expected) + ", got " +
                      std::to_string(got)) {}

NonFiniteError::NonFiniteError(std::string what, std::size_t step)
    : Error(std::move(what) + " (step " + std::to_string(step) + ")"), step_(step) {}

void check_dimension(const StochasticOracle& oracle, const Vector& x) {
  if (static_cast<std::size_t>(x.size()) != oracle.dimension()) {
    throw DimensionMismatch(oracle.dimension(), static_cast<std::size_t>(x.size()));
  }
}

bool all_finite(const Vector& v) { return v.allFinite(); }

double value(const StochasticOracle& oracle, const Vector& x) {
  check_dimension(oracle, x);
  return oracle.value_unchecked(x);
}

Vector full_gradient(const StochasticOracle& oracle, const Vector& x) {
  check_dimension(oracle, x);
  Vector g(x.size());
  oracle.full_gradient_into(x, g);
  return g;
}

Vector sample_gradient(const StochasticOracle& oracle, const Vector& x, RngStream& rng) {
  check_dimension(oracle, x);
  Vector g = Vector::Zero(x.size());
  oracle.add_sample_gradient(x, rng, g);
  return g;
}

void minibatch_gradient_into(const StochasticOracle& oracle, const Vector& x, std::uint64_t m,
                             RngStream& rng, Vector& out) {
  if (m == 0) throw InvalidArgument("mini-batch size must be at least 1");
  check_dimension(oracle, x);
  out.setZero(x.size());
  for (std::uint64_t i = 0; i < m; ++i) oracle.add_sample_gradient(x, rng, out);
  if (m > 1) out /= static_cast<double>(m);
}

Vector minibatch_gradient(const StochasticOracle& oracle, const Vector& x, std::uint64_t m,
                          RngStream& rng) {
  Vector g;
  minibatch_gradient_into(oracle, x, m, rng, g);
  return g;
}

double suboptimality(const StochasticOracle& oracle, const Vector& x) {
  const auto& opt = oracle.optimum();
  if (!opt) return std::numeric_limits<double>::quiet_NaN();
  return oracle.value_unchecked(x) - opt->f;
}

double distance_to_optimum(const StochasticOracle& oracle, const Vector& x) {
  const auto& opt = oracle.optimum();
  if (!opt) return std::numeric_limits<double>::quiet_NaN();
  return (x - opt->x).norm();
}

}  // namespace heavyclip
