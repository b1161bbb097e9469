#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "heavyclip/rng.hpp"

namespace heavyclip {

using Vector = Eigen::VectorXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public InvalidArgument {
 public:
  DimensionMismatch(std::size_t expected, std::size_t got);
};

/// A NaN/Inf reached optimizer state; the trial is aborted at `step`.
class NonFiniteError : public Error {
 public:
  NonFiniteError(std::string what, std::size_t step);
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

struct Optimum {
  Vector x;
  double f = 0.0;
};

/// Smooth convex objective reachable through unbiased stochastic gradients
/// with variance at most `variance_bound()`.
///
/// Implementations are immutable after construction; all randomness comes
/// from the caller's RngStream, so one oracle can serve concurrent trials.
class StochasticOracle {
 public:
  virtual ~StochasticOracle() = default;

  virtual std::size_t dimension() const = 0;
  virtual double smoothness() const = 0;
  /// 0 when the problem is merely convex.
  virtual double strong_convexity() const = 0;
  virtual double variance_bound() const = 0;
  virtual const std::optional<Optimum>& optimum() const = 0;

  virtual double value_unchecked(const Vector& x) const = 0;
  virtual void full_gradient_into(const Vector& x, Vector& out) const = 0;
  /// Adds one stochastic gradient draw at x to `accumulator`.
  virtual void add_sample_gradient(const Vector& x, RngStream& rng, Vector& accumulator) const = 0;
};

double value(const StochasticOracle& oracle, const Vector& x);
Vector full_gradient(const StochasticOracle& oracle, const Vector& x);
Vector sample_gradient(const StochasticOracle& oracle, const Vector& x, RngStream& rng);

/// Average of m independent draws.
Vector minibatch_gradient(const StochasticOracle& oracle, const Vector& x, std::uint64_t m, RngStream& rng);

/// In-place variant used by the optimizer loops; `out` is resized as needed.
void minibatch_gradient_into(const StochasticOracle& oracle, const Vector& x, std::uint64_t m,
                             RngStream& rng, Vector& out);

/// f(x) - f*, or NaN when the optimum is unknown.
double suboptimality(const StochasticOracle& oracle, const Vector& x);

/// ||x - x*||, or NaN when the optimum is unknown.
double distance_to_optimum(const StochasticOracle& oracle, const Vector& x);

void check_dimension(const StochasticOracle& oracle, const Vector& x);
bool all_finite(const Vector& v);

}  // namespace heavyclip
