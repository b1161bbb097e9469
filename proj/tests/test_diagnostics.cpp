#include <doctest.h>

#include <cmath>
#include <sstream>

#include "heavyclip/diagnostics.hpp"
#include "heavyclip/noise.hpp"

using namespace heavyclip;

namespace {

std::vector<double> draws(const NoiseModel& model, std::size_t count, std::uint64_t seed) {
  RngStream r(seed, 0);
  std::vector<double> v(count);
  for (double& x : v) x = model.sample_scalar(r);
  return v;
}

}  // namespace

TEST_CASE("histogram conserves samples and moments") {
  const auto v = draws(NoiseModel::weibull(), 5000, 1);
  const TailHistogram h = make_histogram(v, 40);
  CHECK(h.bins() == 40);
  CHECK(h.edges.size() == 41);
  std::uint64_t total = 0;
  for (auto c : h.counts) total += c;
  CHECK(total == 5000);
  CHECK(h.sample_count == 5000);
  double mean = 0;
  for (double x : v) mean += x;
  mean /= double(v.size());
  double var = 0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= double(v.size());
  CHECK(h.mean == doctest::Approx(mean).epsilon(1e-10));
  CHECK(h.variance == doctest::Approx(var).epsilon(1e-10));
  double overlay = 0;
  for (std::size_t i = 0; i < h.bins(); ++i) overlay += h.overlay_count(i);
  CHECK(overlay > 0.0);

  const TailHistogram flat = make_histogram({2.0, 2.0, 2.0}, 10);
  CHECK(flat.bins() == 1);
  CHECK(flat.counts[0] == 3);
  CHECK_THROWS_AS(make_histogram(v, 1), InvalidArgument);
  CHECK_THROWS_AS(make_histogram({}, 10), InvalidArgument);
}

TEST_CASE("quantiles") {
  CHECK(quantile({7.0}, 0.3) == 7.0);
  CHECK(quantile({1.0, 3.0}, 0.5) == 2.0);
  CHECK(quantile({3.0, 1.0, 2.0}, 0.0) == 1.0);
  CHECK(quantile({3.0, 1.0, 2.0}, 1.0) == 3.0);
  CHECK_THROWS_AS(quantile({}, 0.5), InvalidArgument);
  CHECK_THROWS_AS(quantile({1.0}, 1.5), InvalidArgument);

  std::vector<std::vector<double>> series;
  RngStream r(2, 2);
  for (int t = 0; t < 30; ++t) {
    std::vector<double> s(12);
    for (double& x : s) x = r.normal();
    series.push_back(s);
  }
  const EnsembleStats e = ensemble_quantiles(series, {0.1, 0.5, 0.9});
  REQUIRE(e.curves.size() == 3);
  CHECK(e.checkpoints.size() == 12);
  for (std::size_t j = 0; j < 12; ++j) {
    CHECK(e.curves[0][j] <= e.curves[1][j]);
    CHECK(e.curves[1][j] <= e.curves[2][j]);
  }
  CHECK_THROWS_AS(ensemble_quantiles(series, {0.5}, {1, 2, 3}), InvalidArgument);
  series[3].pop_back();
  CHECK_THROWS_AS(ensemble_quantiles(series, {0.5}), InvalidArgument);
}

TEST_CASE("oscillation metric") {
  CHECK(oscillation_metric(std::vector<double>(100, 0.5), 0.25) == 1.0);
  std::vector<double> spiky(100, 1.0);
  spiky[90] = 100.0;
  CHECK(oscillation_metric(spiky, 0.25) == doctest::Approx(100.0));
  std::vector<double> scaled = spiky;
  for (double& x : scaled) x *= 1e-6;
  CHECK(oscillation_metric(scaled, 0.25) == doctest::Approx(oscillation_metric(spiky, 0.25)).epsilon(1e-12));
  // The spike sits outside a 5% window.
  CHECK(oscillation_metric(spiky, 0.05) == 1.0);
  CHECK_THROWS_AS(oscillation_metric(spiky, 0.0), InvalidArgument);
  CHECK_THROWS_AS(oscillation_metric({}, 0.5), InvalidArgument);
}

TEST_CASE("sub-Gaussian score separates light and heavy tails") {
  const auto g = subgaussian_diagnostic(draws(NoiseModel::gaussian(), 100000, 3));
  CHECK(g.light);
  CHECK(g.ratio == doctest::Approx(1.0).epsilon(0.1));
  const auto b = subgaussian_diagnostic(draws(NoiseModel::burr(), 100000, 4));
  CHECK_FALSE(b.light);
  CHECK(b.ratio > 10 * kLightTailThreshold);
  CHECK_THROWS_AS(subgaussian_diagnostic(std::vector<double>(500, 1.0)), InvalidArgument);
  CHECK_THROWS_AS(subgaussian_diagnostic(draws(NoiseModel::gaussian(), 99, 5)), InvalidArgument);
}

TEST_CASE("KS statistic") {
  CHECK(ks_statistic({0.5}, [](double x) { return x; }) == doctest::Approx(0.5));
  const auto v = draws(NoiseModel::gaussian(), 20000, 6);
  CHECK(ks_statistic_normal_fit(v) < 0.02);
  CHECK(ks_statistic_normal_fit(draws(NoiseModel::burr(), 20000, 7)) > 0.05);
  CHECK_THROWS_AS(ks_statistic({}, [](double x) { return x; }), InvalidArgument);
}

TEST_CASE("writers are deterministic") {
  const TailHistogram h = make_histogram(draws(NoiseModel::gaussian(), 1000, 8), 10);
  std::ostringstream a, b;
  write_histogram_csv(h, a);
  write_histogram_csv(h, b);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("bin_left,bin_right,count,normal_expected\n", 0) == 0);
  std::size_t lines = 0;
  for (char ch : a.str()) lines += ch == '\n';
  CHECK(lines == 11);

  std::ostringstream s1, s2;
  write_histogram_svg(s1, "t", h);
  write_histogram_svg(s2, "t", h);
  CHECK(s1.str() == s2.str());
  CHECK(s1.str().find("<svg") != std::string::npos);

  const std::vector<PlotSeries> series = {{"a & b", {1, 2, 3}, {1, 0.1, 0.0}, "#000"}};
  std::ostringstream p;
  write_line_plot_svg(p, "gaps", "k", "f", series, true);
  CHECK(p.str().find("a &amp; b") != std::string::npos);

  EnsembleStats e = ensemble_quantiles({{1, 2}, {3, 4}}, {0.5}, {0, 10});
  std::ostringstream q;
  write_quantiles_csv(e, q);
  CHECK(q.str() == "k,q0.5\n0,2\n10,3\n");
}
