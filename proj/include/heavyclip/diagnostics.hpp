#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "heavyclip/core.hpp"

namespace heavyclip {

class LogisticRegressionProblem;

/// Histogram of sample values with a fitted normal overlay.
struct TailHistogram {
  std::vector<double> edges;  // bins + 1 entries
  std::vector<std::uint64_t> counts;
  std::uint64_t sample_count = 0;
  double mean = 0.0;
  double variance = 0.0;
  double bin_width = 0.0;

  std::size_t bins() const { return counts.size(); }
  /// Expected count of the fitted normal in bin i, i.e. density at the bin
  /// centre scaled by sample_count * bin_width.
  double overlay_count(std::size_t i) const;
};

/// Falls back to a single bin when all samples are equal.
TailHistogram make_histogram(const std::vector<double>& samples, std::size_t bins);

/// Histogram of ||grad f_i(x)|| over all rows.
TailHistogram gradient_norm_histogram(const LogisticRegressionProblem& problem, const Vector& x, std::size_t bins);

/// sup |F_n - F| for the empirical CDF of `samples`.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

/// KS statistic against the normal with the samples' own mean and variance.
double ks_statistic_normal_fit(const std::vector<double>& samples);

/// Heuristic tail score.
///
/// Returns mean(min(exp((v - mean)^2 / (kappa * var)), e^50)) / e with
/// kappa = 2 / (1 - e^{-2}), which makes a one-dimensional Gaussian score 1.
/// Not a hypothesis test.
struct SubgaussianScore {
  double ratio = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  std::uint64_t capped = 0;  // summands that hit the cap
  bool light = false;
};

inline constexpr double kLightTailThreshold = 2.0;

/// Needs at least 100 samples with positive variance.
SubgaussianScore subgaussian_diagnostic(const std::vector<double>& samples);

/// Linear interpolation between order statistics.
double quantile(std::vector<double> values, double level);

struct EnsembleStats {
  std::vector<double> levels;
  std::vector<std::uint64_t> checkpoints;
  /// curves[i][j]: quantile `levels[i]` of the ensemble at checkpoint j.
  std::vector<std::vector<double>> curves;
};

/// series[trial][checkpoint]; all series must have the grid of `checkpoints`.
EnsembleStats ensemble_quantiles(const std::vector<std::vector<double>>& series, const std::vector<double>& levels,
                                 std::vector<std::uint64_t> checkpoints = {});

/// max / median of the last ceil(tail_fraction * size) values.
double oscillation_metric(const std::vector<double>& f_gaps, double tail_fraction);

void write_histogram_csv(const TailHistogram& h, std::ostream& out);
void write_quantiles_csv(const EnsembleStats& stats, std::ostream& out);

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  std::string color;
};

/// Deterministic SVG line plot; non-positive values are dropped on a log axis.
void write_line_plot_svg(std::ostream& out, const std::string& title, const std::string& xlabel,
                         const std::string& ylabel, const std::vector<PlotSeries>& series, bool log_y);

/// Histogram bars with the normal overlay drawn as a curve.
void write_histogram_svg(std::ostream& out, const std::string& title, const TailHistogram& h);

}  // namespace heavyclip
