#include "heavyclip/problems.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

namespace heavyclip {

// ---------------------------------------------------------------------------
// Quadratic toy problem

QuadraticToyProblem::QuadraticToyProblem(std::size_t n, NoiseModel noise)
    : n_(n), noise_(noise), sigma2_(static_cast<double>(n) * noise.coordinate_variance()) {
  if (n == 0) throw InvalidArgument("toy problem dimension must be positive");
  optimum_ = Optimum{Vector::Zero(static_cast<Eigen::Index>(n)), 0.0};
}

double QuadraticToyProblem::value_unchecked(const Vector& x) const { return 0.5 * x.squaredNorm(); }

void QuadraticToyProblem::full_gradient_into(const Vector& x, Vector& out) const { out = x; }

void QuadraticToyProblem::add_sample_gradient(const Vector& x, RngStream& rng, Vector& accumulator) const {
  if (noise_.family() == NoiseFamily::None) {
    accumulator += x;
    return;
  }
  for (Eigen::Index i = 0; i < x.size(); ++i) accumulator[i] += x[i] + noise_.sample_scalar(rng);
}

QuadraticToyProblem make_toy(std::size_t n, const NoiseModel& noise) { return QuadraticToyProblem(n, noise); }

// ---------------------------------------------------------------------------
// LIBSVM data

void SparseDataset::add_row(double y, const std::vector<std::pair<std::uint32_t, double>>& entries) {
  for (const auto& [idx, val] : entries) {
    index.push_back(idx);
    value.push_back(val);
    dimension = std::max<std::size_t>(dimension, static_cast<std::size_t>(idx) + 1);
  }
  label.push_back(y);
  row_start.push_back(index.size());
}

LibsvmParseError::LibsvmParseError(std::size_t line_no, const std::string& what)
    : InvalidArgument("libsvm line " + std::to_string(line_no) + ": " + what), line(line_no) {}

namespace {

template <typename T>
bool parse_number(std::string_view token, T& out) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

SparseDataset parse_libsvm(std::istream& in, std::size_t dimension) {
  SparseDataset data;
  std::vector<double> raw_labels;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::pair<std::uint32_t, double>> entries;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    double y = 0.0;
    if (!parse_number(tokens[0], y)) throw LibsvmParseError(line_no, "non-numeric label '" + std::string(tokens[0]) + "'");
    entries.clear();
    std::int64_t previous = 0;
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const auto colon = tokens[t].find(':');
      if (colon == std::string_view::npos) {
        throw LibsvmParseError(line_no, "expected idx:val, got '" + std::string(tokens[t]) + "'");
      }
      std::int64_t idx = 0;
      double val = 0.0;
      if (!parse_number(tokens[t].substr(0, colon), idx) || !parse_number(tokens[t].substr(colon + 1), val)) {
        throw LibsvmParseError(line_no, "non-numeric token '" + std::string(tokens[t]) + "'");
      }
      if (idx < 1) throw LibsvmParseError(line_no, "feature indices are 1-based");
      if (idx <= previous) throw LibsvmParseError(line_no, "feature indices must be strictly increasing");
      if (!std::isfinite(val)) throw LibsvmParseError(line_no, "non-finite feature value");
      previous = idx;
      entries.emplace_back(static_cast<std::uint32_t>(idx - 1), val);
    }
    raw_labels.push_back(y);
    data.add_row(y, entries);
  }
  if (data.rows() == 0) throw InvalidArgument("libsvm input contains no samples");

  const std::set<double> labels(raw_labels.begin(), raw_labels.end());
  const bool zero_one = std::all_of(labels.begin(), labels.end(), [](double v) { return v == 0.0 || v == 1.0; });
  const bool signed_pm = std::all_of(labels.begin(), labels.end(), [](double v) { return v == -1.0 || v == 1.0; });
  if (!zero_one && !signed_pm) throw InvalidArgument("labels must be {0,1} or {-1,+1}");
  if (zero_one) {
    for (double& v : data.label) v = v == 0.0 ? -1.0 : 1.0;
  }
  data.dimension = std::max(data.dimension, dimension);
  return data;
}

SparseDataset parse_libsvm_string(const std::string& text, std::size_t dimension) {
  std::istringstream in(text);
  return parse_libsvm(in, dimension);
}

SparseDataset load_libsvm(const std::filesystem::path& path, std::size_t dimension) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset '" + path.string() + "'");
  return parse_libsvm(in, dimension);
}

void write_libsvm(const SparseDataset& data, std::ostream& out) {
  char buf[64];
  for (std::size_t r = 0; r < data.rows(); ++r) {
    out << (data.label[r] > 0 ? "1" : "-1");
    for (std::size_t k = data.row_start[r]; k < data.row_start[r + 1]; ++k) {
      auto res = std::to_chars(buf, buf + sizeof(buf), data.value[k]);
      out << ' ' << (data.index[k] + 1) << ':' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    out << '\n';
  }
}

std::string to_libsvm_string(const SparseDataset& data) {
  std::ostringstream out;
  write_libsvm(data, out);
  return out.str();
}

namespace {

// out = A v
void multiply(const SparseDataset& d, const Vector& v, Vector& out) {
  out.setZero(static_cast<Eigen::Index>(d.rows()));
  for (std::size_t r = 0; r < d.rows(); ++r) {
    double s = 0.0;
    for (std::size_t k = d.row_start[r]; k < d.row_start[r + 1]; ++k) s += d.value[k] * v[d.index[k]];
    out[static_cast<Eigen::Index>(r)] = s;
  }
}

// out = A^T w
void multiply_transpose(const SparseDataset& d, const Vector& w, Vector& out) {
  out.setZero(static_cast<Eigen::Index>(d.dimension));
  for (std::size_t r = 0; r < d.rows(); ++r) {
    const double wr = w[static_cast<Eigen::Index>(r)];
    for (std::size_t k = d.row_start[r]; k < d.row_start[r + 1]; ++k) out[d.index[k]] += d.value[k] * wr;
  }
}

}  // namespace

double gram_lambda_max(const SparseDataset& data, double rel_tol, int max_iter) {
  if (data.rows() == 0 || data.dimension == 0) throw InvalidArgument("empty dataset");
  RngStream rng(0x5EEDULL, 0x1A3BDA);
  Vector v(static_cast<Eigen::Index>(data.dimension));
  for (auto& e : v) e = rng.normal();
  v.normalize();
  Vector av, w;
  double lambda = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    multiply(data, v, av);
    multiply_transpose(data, av, w);
    const double next = v.dot(w);
    const double wn = w.norm();
    if (wn == 0.0) return 0.0;
    v = w / wn;
    if (it > 0 && std::fabs(next - lambda) <= rel_tol * std::fabs(next)) {
      // ||A^T A v|| with v the converged direction is the sharper estimate.
      return std::max(next, wn);
    }
    lambda = next;
  }
  return lambda;
}

// ---------------------------------------------------------------------------
// Logistic regression

namespace {

// log(1 + exp(-t)) without overflow.
double softplus_neg(double t) { return t > 0 ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t)); }

// 1 / (1 + exp(t)).
double sigmoid_neg(double t) {
  if (t >= 0) {
    const double e = std::exp(-t);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(t));
}

}  // namespace

LogisticRegressionProblem::LogisticRegressionProblem(SparseDataset data) : data_(std::move(data)), sigma2_(0.0) {
  if (data_.rows() == 0) throw InvalidArgument("logistic regression needs at least one sample");
  if (data_.dimension == 0) throw InvalidArgument("logistic regression needs at least one feature");
  L_ = gram_lambda_max(data_) / (4.0 * static_cast<double>(data_.rows()));
  if (!(L_ > 0.0)) throw InvalidArgument("design matrix is identically zero");
}

double LogisticRegressionProblem::row_margin(std::size_t i, const Vector& x) const {
  double s = 0.0;
  for (std::size_t k = data_.row_start[i]; k < data_.row_start[i + 1]; ++k) s += data_.value[k] * x[data_.index[k]];
  return data_.label[i] * s;
}

double LogisticRegressionProblem::component_value(std::size_t i, const Vector& x) const {
  return softplus_neg(row_margin(i, x));
}

void LogisticRegressionProblem::add_component_gradient(std::size_t i, const Vector& x, double weight,
                                                       Vector& out) const {
  const double coeff = -weight * data_.label[i] * sigmoid_neg(row_margin(i, x));
  for (std::size_t k = data_.row_start[i]; k < data_.row_start[i + 1]; ++k) out[data_.index[k]] += coeff * data_.value[k];
}

Vector LogisticRegressionProblem::component_gradient(std::size_t i, const Vector& x) const {
  check_dimension(*this, x);
  if (i >= rows()) throw InvalidArgument("row index out of range");
  Vector g = Vector::Zero(x.size());
  add_component_gradient(i, x, 1.0, g);
  return g;
}

double LogisticRegressionProblem::value_unchecked(const Vector& x) const {
  double s = 0.0;
  for (std::size_t i = 0; i < rows(); ++i) s += component_value(i, x);
  return s / static_cast<double>(rows());
}

void LogisticRegressionProblem::full_gradient_into(const Vector& x, Vector& out) const {
  out.setZero(x.size());
  const double w = 1.0 / static_cast<double>(rows());
  for (std::size_t i = 0; i < rows(); ++i) add_component_gradient(i, x, w, out);
}

void LogisticRegressionProblem::add_sample_gradient(const Vector& x, RngStream& rng, Vector& accumulator) const {
  add_component_gradient(static_cast<std::size_t>(rng.below(rows())), x, 1.0, accumulator);
}

std::vector<double> LogisticRegressionProblem::component_gradient_norms(const Vector& x) const {
  check_dimension(*this, x);
  std::vector<double> out(rows());
  for (std::size_t i = 0; i < rows(); ++i) {
    // grad f_i = c * a_i, so its norm is |c| * ||a_i||.
    double row_norm2 = 0.0;
    for (std::size_t k = data_.row_start[i]; k < data_.row_start[i + 1]; ++k) row_norm2 += data_.value[k] * data_.value[k];
    out[i] = sigmoid_neg(row_margin(i, x)) * std::sqrt(row_norm2);
  }
  return out;
}

std::vector<double> LogisticRegressionProblem::component_noise_norms(const Vector& x) const {
  const Vector g = full_gradient(*this, x);
  std::vector<double> out(rows());
  Vector gi(x.size());
  for (std::size_t i = 0; i < rows(); ++i) {
    gi = -g;
    add_component_gradient(i, x, 1.0, gi);
    out[i] = gi.norm();
  }
  return out;
}

double LogisticRegressionProblem::empirical_variance(const Vector& x) const {
  double s = 0.0;
  for (double v : component_noise_norms(x)) s += v * v;
  return s / static_cast<double>(rows());
}

LogisticRegressionProblem make_logreg(SparseDataset data) {
  LogisticRegressionProblem problem(std::move(data));
  const auto n = static_cast<Eigen::Index>(problem.dimension());
  const Vector x0 = Vector::Zero(n);
  double sigma2 = problem.empirical_variance(x0);
  RngStream rng(0x51C3AULL, 0);
  for (int p = 0; p < 10; ++p) {
    Vector probe = x0;
    for (Eigen::Index j = 0; j < n; ++j) probe[j] += rng.normal();
    sigma2 = std::max(sigma2, problem.empirical_variance(probe));
  }
  problem.set_variance_bound(sigma2);
  return problem;
}

// ---------------------------------------------------------------------------
// Reference solve

ReferenceSolution solve_reference(const StochasticOracle& problem, double tol, std::size_t max_iter,
                                  std::optional<Vector> start) {
  if (!(tol > 0.0)) throw InvalidArgument("tolerance must be positive");
  const auto n = static_cast<Eigen::Index>(problem.dimension());
  Vector x = start ? *start : Vector::Zero(n);
  check_dimension(problem, x);
  const double step = 1.0 / problem.smoothness();

  ReferenceSolution sol;
  sol.tol = tol;
  Vector y = x, x_prev = x, grad(n), grad_x(n);
  double t = 1.0;
  for (std::size_t it = 0;; ++it) {
    problem.full_gradient_into(x, grad_x);
    const double gnorm = grad_x.norm();
    if (!std::isfinite(gnorm)) throw NonFiniteError("reference solver diverged", it);
    if (gnorm <= tol || it >= max_iter) {
      sol.x = x;
      sol.f_star = problem.value_unchecked(x);
      sol.grad_norm = gnorm;
      sol.iterations = it;
      sol.converged = gnorm <= tol;
      sol.stop_reason = sol.converged ? "gradient_norm" : "iteration_cap";
      return sol;
    }
    problem.full_gradient_into(y, grad);
    x_prev = x;
    x = y - step * grad;
    // Restart momentum whenever it points uphill.
    if (grad.dot(x - x_prev) > 0.0) {
      t = 1.0;
      y = x;
      continue;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = x + ((t - 1.0) / t_next) * (x - x_prev);
    t = t_next;
  }
}

void save_reference(const ReferenceSolution& solution, const std::filesystem::path& path) {
  nlohmann::json j;
  j["x"] = std::vector<double>(solution.x.data(), solution.x.data() + solution.x.size());
  j["f_star"] = solution.f_star;
  j["grad_norm"] = solution.grad_norm;
  j["tol"] = solution.tol;
  j["iterations"] = solution.iterations;
  j["converged"] = solution.converged;
  j["stop_reason"] = solution.stop_reason;
  std::ofstream out(path);
  if (!out) throw Error("cannot write optimum cache '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

ReferenceSolution load_reference(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open optimum cache '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
    ReferenceSolution s;
    const auto x = j.at("x").get<std::vector<double>>();
    s.x = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
    s.f_star = j.at("f_star").get<double>();
    s.grad_norm = j.at("grad_norm").get<double>();
    s.tol = j.at("tol").get<double>();
    s.iterations = j.value("iterations", std::size_t{0});
    s.converged = j.value("converged", s.grad_norm <= s.tol);
    s.stop_reason = j.value("stop_reason", std::string(s.converged ? "gradient_norm" : "iteration_cap"));
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed optimum cache '" + path.string() + "': " + e.what());
  }
}

std::filesystem::path default_cache_path(const std::filesystem::path& dataset) {
  return std::filesystem::path(dataset.string() + ".optimum.json");
}

}  // namespace heavyclip
