#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "heavyclip/core.hpp"
#include "heavyclip/noise.hpp"

namespace heavyclip {

/// f(x) = ||x||^2 / 2 with stochastic gradient x + xi, xi ~ NoiseModel^n.
/// L = mu = 1, x* = 0, f* = 0, sigma^2 = n (0 for the noiseless model).
class QuadraticToyProblem final : public StochasticOracle {
 public:
  QuadraticToyProblem(std::size_t n, NoiseModel noise);

  std::size_t dimension() const override { return n_; }
  double smoothness() const override { return 1.0; }
  double strong_convexity() const override { return 1.0; }
  double variance_bound() const override { return sigma2_; }
  const std::optional<Optimum>& optimum() const override { return optimum_; }
  const NoiseModel& noise() const { return noise_; }

  double value_unchecked(const Vector& x) const override;
  void full_gradient_into(const Vector& x, Vector& out) const override;
  void add_sample_gradient(const Vector& x, RngStream& rng, Vector& accumulator) const override;

 private:
  std::size_t n_;
  NoiseModel noise_;
  double sigma2_;
  std::optional<Optimum> optimum_;
};

QuadraticToyProblem make_toy(std::size_t n, const NoiseModel& noise);

/// Row-compressed sparse samples with labels in {-1, +1}.
/// Column indices are 0-based in memory and strictly increasing per row.
struct SparseDataset {
  std::vector<std::size_t> row_start{0};
  std::vector<std::uint32_t> index;
  std::vector<double> value;
  std::vector<double> label;
  std::size_t dimension = 0;

  std::size_t rows() const { return label.size(); }
  std::size_t nonzeros() const { return value.size(); }
  void add_row(double label, const std::vector<std::pair<std::uint32_t, double>>& entries);
};

struct LibsvmParseError : InvalidArgument {
  LibsvmParseError(std::size_t line, const std::string& what);
  std::size_t line;
};

/// Parses "<label> <idx>:<val> ..." lines (1-based indices). Labels in {0,1}
/// map 0 -> -1; {-1,+1} pass through; any other label set is rejected.
/// `dimension` overrides the inferred dimension when it is larger.
SparseDataset parse_libsvm(std::istream& in, std::size_t dimension = 0);
SparseDataset parse_libsvm_string(const std::string& text, std::size_t dimension = 0);
SparseDataset load_libsvm(const std::filesystem::path& path, std::size_t dimension = 0);

/// Writes the dataset back in LIBSVM text form with labels as -1/+1 and
/// shortest round-trip formatting for values.
void write_libsvm(const SparseDataset& data, std::ostream& out);
std::string to_libsvm_string(const SparseDataset& data);

/// Largest eigenvalue of A^T A by power iteration (fixed seed).
double gram_lambda_max(const SparseDataset& data, double rel_tol = 1e-6, int max_iter = 10000);

/// f(x) = (1/r) sum_i log(1 + exp(-y_i <a_i, x>)); a stochastic gradient is
/// the gradient of one uniformly drawn summand.
class LogisticRegressionProblem final : public StochasticOracle {
 public:
  explicit LogisticRegressionProblem(SparseDataset data);

  std::size_t dimension() const override { return data_.dimension; }
  double smoothness() const override { return L_; }
  double strong_convexity() const override { return 0.0; }
  double variance_bound() const override { return sigma2_; }
  const std::optional<Optimum>& optimum() const override { return optimum_; }

  double value_unchecked(const Vector& x) const override;
  void full_gradient_into(const Vector& x, Vector& out) const override;
  void add_sample_gradient(const Vector& x, RngStream& rng, Vector& accumulator) const override;

  const SparseDataset& data() const { return data_; }
  std::size_t rows() const { return data_.rows(); }
  double row_margin(std::size_t i, const Vector& x) const;
  double component_value(std::size_t i, const Vector& x) const;
  void add_component_gradient(std::size_t i, const Vector& x, double weight, Vector& out) const;
  Vector component_gradient(std::size_t i, const Vector& x) const;
  /// ||grad f_i(x)|| for every row.
  std::vector<double> component_gradient_norms(const Vector& x) const;
  /// ||grad f_i(x) - grad f(x)|| for every row.
  std::vector<double> component_noise_norms(const Vector& x) const;
  /// (1/r) sum_i ||grad f_i(x) - grad f(x)||^2.
  double empirical_variance(const Vector& x) const;

  void set_optimum(Optimum opt) { optimum_ = std::move(opt); }
  void set_variance_bound(double sigma2) { sigma2_ = sigma2; }

 private:
  SparseDataset data_;
  double L_;
  double sigma2_;
  std::optional<Optimum> optimum_;
};

/// Builds the oracle: L = lambda_max(A^T A)/(4r); sigma^2 is the maximum
/// empirical variance over x = 0 and ten seeded perturbations of it.
LogisticRegressionProblem make_logreg(SparseDataset data);

struct ReferenceSolution {
  Vector x;
  double f_star = 0.0;
  double grad_norm = 0.0;
  double tol = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  /// "gradient_norm" or "iteration_cap".
  std::string stop_reason;
};

/// Deterministic accelerated gradient descent (step 1/L, gradient restarts)
/// until ||grad f|| <= tol or `max_iter` iterations.
ReferenceSolution solve_reference(const StochasticOracle& problem, double tol,
                                  std::size_t max_iter = 2'000'000,
                                  std::optional<Vector> start = std::nullopt);

/// Cached optimum: JSON {x, f_star, grad_norm, tol, ...}.
void save_reference(const ReferenceSolution& solution, const std::filesystem::path& path);
ReferenceSolution load_reference(const std::filesystem::path& path);
std::filesystem::path default_cache_path(const std::filesystem::path& dataset);

}  // namespace heavyclip
