#include "heavyclip/diagnostics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "heavyclip/problems.hpp"

namespace heavyclip {

namespace {

void moments(const std::vector<double>& v, double& mean, double& var) {
  const auto n = static_cast<double>(v.size());
  mean = 0.0;
  for (double e : v) mean += e;
  mean /= n;
  var = 0.0;
  for (double e : v) var += (e - mean) * (e - mean);
  var /= n;
}

void put_double(std::ostream& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, res.ptr - buf);
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

std::string escape_xml(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

double TailHistogram::overlay_count(std::size_t i) const {
  if (!(variance > 0.0)) return i == 0 ? static_cast<double>(sample_count) : 0.0;
  const double centre = 0.5 * (edges[i] + edges[i + 1]);
  const double sd = std::sqrt(variance);
  const double z = (centre - mean) / sd;
  const double density = std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
  return density * static_cast<double>(sample_count) * bin_width;
}

TailHistogram make_histogram(const std::vector<double>& samples, std::size_t bins) {
  if (bins < 2) throw InvalidArgument("histogram needs at least 2 bins");
  if (samples.empty()) throw InvalidArgument("histogram needs at least one sample");
  TailHistogram h;
  h.sample_count = samples.size();
  moments(samples, h.mean, h.variance);
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) {
    h.bin_width = 1.0;
    h.edges = {lo - 0.5, lo + 0.5};
    h.counts = {samples.size()};
    return h;
  }
  h.bin_width = (hi - lo) / static_cast<double>(bins);
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = lo + h.bin_width * static_cast<double>(i);
  h.edges.back() = hi;
  h.counts.assign(bins, 0);
  for (double v : samples) {
    auto idx = static_cast<std::size_t>((v - lo) / h.bin_width);
    h.counts[std::min(idx, bins - 1)] += 1;
  }
  return h;
}

TailHistogram gradient_norm_histogram(const LogisticRegressionProblem& problem, const Vector& x, std::size_t bins) {
  return make_histogram(problem.component_gradient_norms(x), bins);
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw InvalidArgument("KS statistic needs samples");
  std::sort(samples.begin(), samples.end());
  const auto n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_statistic_normal_fit(const std::vector<double>& samples) {
  double mean, var;
  moments(samples, mean, var);
  if (!(var > 0.0)) throw InvalidArgument("zero empirical variance");
  const double sd = std::sqrt(var);
  return ks_statistic(samples, [&](double v) { return normal_cdf((v - mean) / sd); });
}

SubgaussianScore subgaussian_diagnostic(const std::vector<double>& samples) {
  if (samples.size() < 100) throw InvalidArgument("sub-Gaussian diagnostic needs at least 100 samples");
  SubgaussianScore s;
  moments(samples, s.mean, s.variance);
  if (!(s.variance > 0.0)) throw InvalidArgument("zero empirical variance");
  const double kappa = 2.0 / (1.0 - std::exp(-2.0));
  constexpr double cap_exponent = 50.0;
  double total = 0.0;
  for (double v : samples) {
    const double e = (v - s.mean) * (v - s.mean) / (kappa * s.variance);
    if (e >= cap_exponent) {
      total += std::exp(cap_exponent);
      ++s.capped;
    } else {
      total += std::exp(e);
    }
  }
  s.ratio = total / static_cast<double>(samples.size()) / std::numbers::e;
  s.light = s.ratio <= kLightTailThreshold;
  return s;
}

double quantile(std::vector<double> values, double level) {
  if (values.empty()) throw InvalidArgument("quantile of an empty set");
  if (!(level >= 0.0 && level <= 1.0)) throw InvalidArgument("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end(), [](double a, double b) {
    // NaN sorts last.
    if (std::isnan(a)) return false;
    if (std::isnan(b)) return true;
    return a < b;
  });
  const double pos = level * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0 || values[lo] == values[hi]) return values[lo];
  return values[lo] + frac * (values[hi] - values[lo]);
}

EnsembleStats ensemble_quantiles(const std::vector<std::vector<double>>& series, const std::vector<double>& levels,
                                 std::vector<std::uint64_t> checkpoints) {
  if (series.empty()) throw InvalidArgument("ensemble is empty");
  const std::size_t len = series.front().size();
  for (const auto& s : series) {
    if (s.size() != len) throw InvalidArgument("trajectories do not share a checkpoint grid");
  }
  if (!checkpoints.empty() && checkpoints.size() != len) {
    throw InvalidArgument("checkpoint grid does not match the trajectories");
  }
  EnsembleStats out;
  out.levels = levels;
  out.checkpoints = std::move(checkpoints);
  if (out.checkpoints.empty()) {
    for (std::size_t j = 0; j < len; ++j) out.checkpoints.push_back(j);
  }
  std::vector<double> column(series.size());
  out.curves.assign(levels.size(), std::vector<double>(len));
  for (std::size_t j = 0; j < len; ++j) {
    for (std::size_t t = 0; t < series.size(); ++t) column[t] = series[t][j];
    for (std::size_t i = 0; i < levels.size(); ++i) out.curves[i][j] = quantile(column, levels[i]);
  }
  return out;
}

double oscillation_metric(const std::vector<double>& f_gaps, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) throw InvalidArgument("tail_fraction must lie in (0, 1]");
  const auto count = static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(f_gaps.size())));
  if (count == 0) throw InvalidArgument("oscillation window is empty");
  std::vector<double> window(f_gaps.end() - static_cast<std::ptrdiff_t>(count), f_gaps.end());
  const double mx = *std::max_element(window.begin(), window.end());
  const double med = quantile(window, 0.5);
  if (mx == med) return 1.0;
  return mx / med;
}

void write_histogram_csv(const TailHistogram& h, std::ostream& out) {
  out << "bin_left,bin_right,count,normal_expected\n";
  for (std::size_t i = 0; i < h.bins(); ++i) {
    put_double(out, h.edges[i]);
    out << ',';
    put_double(out, h.edges[i + 1]);
    out << ',' << h.counts[i] << ',';
    put_double(out, h.overlay_count(i));
    out << '\n';
  }
}

void write_quantiles_csv(const EnsembleStats& stats, std::ostream& out) {
  out << "k";
  for (double l : stats.levels) {
    out << ",q";
    put_double(out, l);
  }
  out << '\n';
  for (std::size_t j = 0; j < stats.checkpoints.size(); ++j) {
    out << stats.checkpoints[j];
    for (const auto& curve : stats.curves) {
      out << ',';
      put_double(out, curve[j]);
    }
    out << '\n';
  }
}

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 170.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

struct Axis {
  double lo, hi;
  bool log;
  double map(double v, double pix_lo, double pix_hi) const {
    const double a = log ? std::log10(lo) : lo;
    const double b = log ? std::log10(hi) : hi;
    const double t = ((log ? std::log10(v) : v) - a) / (b - a);
    return pix_lo + t * (pix_hi - pix_lo);
  }
};

Axis make_axis(double lo, double hi, bool log) {
  if (!(hi > lo)) {
    const double pad = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
    if (log) return {lo / 10.0, lo * 10.0, true};
    return {lo - pad, hi + pad, false};
  }
  if (log) return {std::pow(10.0, std::floor(std::log10(lo))), std::pow(10.0, std::ceil(std::log10(hi))), true};
  return {lo, hi, false};
}

void svg_header(std::ostream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape_xml(title)
      << "</text>\n";
}

void svg_axes(std::ostream& out, const Axis& xa, const Axis& ya, const std::string& xlabel,
              const std::string& ylabel) {
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  out << "<rect x=\"" << x0 << "\" y=\"" << y1 << "\" width=\"" << x1 - x0 << "\" height=\"" << y0 - y1
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xa.lo + (xa.hi - xa.lo) * i / 4.0;
    const double px = x0 + (x1 - x0) * i / 4.0;
    out << "<text x=\"" << px << "\" y=\"" << y0 + 18 << "\" text-anchor=\"middle\">" << fmt(xv) << "</text>\n";
  }
  if (ya.log) {
    const int a = static_cast<int>(std::round(std::log10(ya.lo)));
    const int b = static_cast<int>(std::round(std::log10(ya.hi)));
    const int step = std::max(1, (b - a) / 8);
    for (int e = a; e <= b; e += step) {
      const double py = ya.map(std::pow(10.0, e), y0, y1);
      out << "<line x1=\"" << x0 << "\" x2=\"" << x1 << "\" y1=\"" << py << "\" y2=\"" << py
          << "\" stroke=\"#ddd\"/>\n";
      out << "<text x=\"" << x0 - 6 << "\" y=\"" << py + 4 << "\" text-anchor=\"end\">1e" << e << "</text>\n";
    }
  } else {
    for (int i = 0; i <= 4; ++i) {
      const double yv = ya.lo + (ya.hi - ya.lo) * i / 4.0;
      const double py = y0 + (y1 - y0) * i / 4.0;
      out << "<text x=\"" << x0 - 6 << "\" y=\"" << py + 4 << "\" text-anchor=\"end\">" << fmt(yv) << "</text>\n";
    }
  }
  out << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 15 << "\" text-anchor=\"middle\">"
      << escape_xml(xlabel) << "</text>\n";
  out << "<text x=\"18\" y=\"" << (y0 + y1) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << (y0 + y1) / 2 << ")\">" << escape_xml(ylabel) << "</text>\n";
}

}  // namespace

void write_line_plot_svg(std::ostream& out, const std::string& title, const std::string& xlabel,
                         const std::string& ylabel, const std::vector<PlotSeries>& series, bool log_y) {
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
  double ylo = xlo, yhi = -xlo;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (log_y && !(s.y[i] > 0.0))) continue;
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i]);
      yhi = std::max(yhi, s.y[i]);
    }
  }
  svg_header(out, title);
  if (!std::isfinite(xlo)) {
    out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight / 2 << "\" text-anchor=\"middle\">no data</text>\n";
    out << "</svg>\n";
    return;
  }
  const Axis xa = make_axis(xlo, xhi, false);
  const Axis ya = make_axis(ylo, yhi, log_y);
  svg_axes(out, xa, ya, xlabel, ylabel);
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const std::string color = s.color.empty() ? kPalette[si % 8] : s.color;
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\" points=\"";
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (log_y && !(s.y[i] > 0.0))) continue;
      out << fmt(xa.map(s.x[i], x0, x1), 6) << ',' << fmt(ya.map(s.y[i], y0, y1), 6) << ' ';
    }
    out << "\"/>\n";
    const double ly = kTop + 16.0 * static_cast<double>(si) + 8.0;
    out << "<line x1=\"" << x1 + 10 << "\" x2=\"" << x1 + 30 << "\" y1=\"" << ly << "\" y2=\"" << ly
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << x1 + 34 << "\" y=\"" << ly + 4 << "\">" << escape_xml(s.name) << "</text>\n";
  }
  out << "</svg>\n";
}

void write_histogram_svg(std::ostream& out, const std::string& title, const TailHistogram& h) {
  svg_header(out, title);
  double top = 0.0;
  for (std::size_t i = 0; i < h.bins(); ++i) {
    top = std::max({top, static_cast<double>(h.counts[i]), h.overlay_count(i)});
  }
  const Axis xa = make_axis(h.edges.front(), h.edges.back(), false);
  const Axis ya = make_axis(0.0, top > 0.0 ? top * 1.05 : 1.0, false);
  svg_axes(out, xa, ya, "value", "count");
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  for (std::size_t i = 0; i < h.bins(); ++i) {
    const double px0 = xa.map(h.edges[i], x0, x1);
    const double px1 = xa.map(h.edges[i + 1], x0, x1);
    const double py = ya.map(static_cast<double>(h.counts[i]), y0, y1);
    out << "<rect x=\"" << fmt(px0, 6) << "\" y=\"" << fmt(py, 6) << "\" width=\"" << fmt(px1 - px0, 6)
        << "\" height=\"" << fmt(y0 - py, 6) << "\" fill=\"#1f77b4\" fill-opacity=\"0.6\"/>\n";
  }
  out << "<polyline fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < h.bins(); ++i) {
    const double cx = 0.5 * (h.edges[i] + h.edges[i + 1]);
    out << fmt(xa.map(cx, x0, x1), 6) << ',' << fmt(ya.map(h.overlay_count(i), y0, y1), 6) << ' ';
  }
  out << "\"/>\n</svg>\n";
}

}  // namespace heavyclip
