#include "heavyclip/schedules.hpp"

#include <algorithm>
#include <cmath>

namespace heavyclip {

namespace {

constexpr int kMaxFixedPointIterations = 100;

std::uint64_t round_up(double raw) {
  if (!std::isfinite(raw)) throw InvalidArgument("batchsize formula produced a non-finite value");
  return static_cast<std::uint64_t>(std::ceil(std::max(1.0, raw)));
}

void check_beta(double beta) {
  if (!(beta > 0.0 && beta < 1.0)) throw InvalidArgument("confidence level beta must lie in (0, 1)");
}

void check_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument(std::string(name) + " must be positive and finite");
}

void check_nonnegative(double v, const char* name) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument(std::string(name) + " must be non-negative and finite");
}

}  // namespace

double confidence_log(double n_iterations, double beta) {
  check_beta(beta);
  if (!(n_iterations >= 1.0)) throw InvalidArgument("number of iterations must be at least 1");
  const double l = std::log(4.0 * n_iterations / beta);
  if (l < 2.0) throw InvalidArgument("ln(4N/beta) >= 2 is required (got " + std::to_string(l) + ")");
  return l;
}

AlphaPair sstm_alpha(std::uint64_t k, double a, double L) {
  const auto kd = static_cast<double>(k);
  return {(kd + 2.0) / (2.0 * a * L), (kd + 1.0) * (kd + 4.0) / (4.0 * a * L)};
}

double sstm_min_a(double log_term, double C) {
  const double l = log_term;
  const double inner = 2.0 * l + std::sqrt(4.0 * l * l + 2.0 * l);
  return std::max({1.0, 16.0 * l / C, 36.0 * inner * inner});
}

double sstm_batch_raw(double sigma2, double alpha, double n_iterations, double log_term, double radius,
                      double restart_factor, const TheoremConstants& k) {
  const double C2R2 = kSstmC * kSstmC * radius * radius;
  const double common = restart_factor * sigma2 * alpha * alpha * n_iterations / C2R2;
  const double s = k.practical_scale;
  return std::max({1.0, 6000.0 * s * common * log_term, 10368.0 * s * common});
}

std::string to_string(BatchPolicy policy) {
  switch (policy) {
    case BatchPolicy::TheoremExact: return "theorem";
    case BatchPolicy::MediumBatch: return "medium";
    case BatchPolicy::ConstantBatch: return "constant";
    case BatchPolicy::Combined: return "combined";
    case BatchPolicy::Manual: return "manual";
  }
  return "unknown";
}

BatchPolicy batch_policy_from_string(const std::string& name) {
  if (name == "theorem") return BatchPolicy::TheoremExact;
  if (name == "medium") return BatchPolicy::MediumBatch;
  if (name == "constant") return BatchPolicy::ConstantBatch;
  if (name == "combined") return BatchPolicy::Combined;
  if (name == "manual") return BatchPolicy::Manual;
  throw InvalidArgument("unknown batch policy '" + name + "'");
}

std::uint64_t SstmSchedule::batch(std::uint64_t k) const {
  if (batches.empty()) return 1;
  return k < batches.size() ? batches[k] : batches.back();
}

SstmSchedule sstm_manual(double a, double L, double B, std::uint64_t batch, std::uint64_t N) {
  check_positive(a, "a");
  check_positive(L, "L");
  if (!(B > 0.0)) throw InvalidArgument("clipping parameter B must be positive");
  if (batch == 0) throw InvalidArgument("batchsize must be at least 1");
  SstmSchedule s;
  s.a = a;
  s.L = L;
  s.B = B;
  s.N = N;
  s.policy = BatchPolicy::Manual;
  s.batches.assign(std::max<std::uint64_t>(N, 1), batch);
  s.provenance = "manual";
  return s;
}

namespace {

void fill_sstm_batches(SstmSchedule& s, const TheoremConstants& k) {
  s.batches.resize(s.N);
  for (std::uint64_t i = 0; i < s.N; ++i) {
    s.batches[i] = round_up(
        sstm_batch_raw(s.sigma2, s.alpha(i), static_cast<double>(s.N), s.log_term, s.R0, 1.0, k));
  }
}

}  // namespace

SstmSchedule sstm_theorem_params(double L, double sigma2, double R0, std::uint64_t N, double beta,
                                 const TheoremConstants& k) {
  check_positive(L, "L");
  check_nonnegative(sigma2, "sigma^2");
  check_positive(R0, "R0");
  SstmSchedule s;
  s.log_term = confidence_log(static_cast<double>(N), beta);
  s.L = L;
  s.sigma2 = sigma2;
  s.R0 = R0;
  s.N = N;
  s.beta = beta;
  s.C = kSstmC;
  s.B = s.C * R0 / (8.0 * s.log_term);
  s.a = sstm_min_a(s.log_term, s.C);
  s.policy = BatchPolicy::TheoremExact;
  s.provenance = "clipped-SSTM convex theorem";
  fill_sstm_batches(s, k);
  return s;
}

SstmSchedule sstm_batch_policy(BatchPolicy policy, double L, double sigma2, double R0, std::uint64_t N,
                               double beta, std::optional<double> a0, const TheoremConstants& k) {
  SstmSchedule s = sstm_theorem_params(L, sigma2, R0, N, beta, k);
  const double a_min = s.a;
  const double l = s.log_term;
  const double n = static_cast<double>(N);
  double a = a_min;
  switch (policy) {
    case BatchPolicy::TheoremExact:
      return s;
    case BatchPolicy::Manual:
      throw InvalidArgument("manual schedules are built with sstm_manual");
    case BatchPolicy::MediumBatch:
      a = n * l;
      s.provenance = "clipped-SSTM medium-batch corollary";
      break;
    case BatchPolicy::ConstantBatch: {
      const double coeff = a0.value_or(std::sqrt(sigma2) / (L * R0));
      if (!(coeff >= 0.0)) throw InvalidArgument("a0 must be non-negative");
      s.a0 = coeff;
      a = coeff * std::pow(n, 1.5) * std::sqrt(l);
      s.provenance = "clipped-SSTM constant-batch corollary";
      break;
    }
    case BatchPolicy::Combined:
      a = std::max(a_min, std::sqrt(sigma2) * std::pow(n, 1.5) * std::sqrt(l) / (L * R0));
      s.provenance = "clipped-SSTM combined-stepsize corollary";
      break;
  }
  if (policy != BatchPolicy::Combined && !(a > a_min)) {
    s.warnings.push_back(to_string(policy) + " policy: a = " + std::to_string(a) +
                         " does not dominate the theorem minimum " + std::to_string(a_min) +
                         "; using the theorem schedule");
    return s;
  }
  s.a = a;
  s.policy = policy;
  fill_sstm_batches(s, k);
  return s;
}

std::string to_string(SgdVariant variant) {
  switch (variant) {
    case SgdVariant::Manual: return "manual";
    case SgdVariant::ConvexTheorem: return "convex-theorem";
    case SgdVariant::StronglyConvexTheorem: return "strongly-convex-theorem";
    case SgdVariant::DecayingHeuristic: return "decaying";
  }
  return "unknown";
}

double SgdSchedule::lambda_at(std::uint64_t k) const {
  switch (variant) {
    case SgdVariant::Manual:
    case SgdVariant::ConvexTheorem:
      return lambda;
    case SgdVariant::StronglyConvexTheorem:
      return 4.0 * std::sqrt(L * std::pow(contraction, static_cast<double>(k)) * r0);
    case SgdVariant::DecayingHeuristic:
      return period == 0 ? lambda : lambda * std::pow(decay, static_cast<double>(k / period));
  }
  return lambda;
}

double SgdSchedule::batch_raw(std::uint64_t k) const {
  if (variant != SgdVariant::StronglyConvexTheorem) return static_cast<double>(batch_size);
  const double denom = 16.0 * L * r0 * std::pow(contraction, static_cast<double>(k)) * log_term;
  return std::max(1.0, batch_scale * static_cast<double>(N) * sigma2 / denom);
}

std::uint64_t SgdSchedule::batch_at(std::uint64_t k) const {
  if (variant != SgdVariant::StronglyConvexTheorem) return batch_size;
  return round_up(batch_raw(k));
}

SgdSchedule sgd_manual(double gamma, double lambda, std::uint64_t batch) {
  check_nonnegative(gamma, "gamma");
  if (!(lambda > 0.0)) throw InvalidArgument("clipping level must be positive");
  if (batch == 0) throw InvalidArgument("batchsize must be at least 1");
  SgdSchedule s;
  s.gamma = gamma;
  s.lambda = lambda;
  s.batch_size = batch;
  s.provenance = "manual";
  return s;
}

SgdSchedule sgd_theorem_params(double L, double sigma2, double R0, std::uint64_t N, double beta,
                               const TheoremConstants& k) {
  check_positive(L, "L");
  check_nonnegative(sigma2, "sigma^2");
  check_positive(R0, "R0");
  SgdSchedule s;
  s.variant = SgdVariant::ConvexTheorem;
  s.log_term = confidence_log(static_cast<double>(N), beta);
  s.N = N;
  s.beta = beta;
  s.L = L;
  s.sigma2 = sigma2;
  s.R0 = R0;
  s.C = kSgdC;
  s.lambda = 2.0 * L * s.C * R0;
  s.gamma = 1.0 / (80.0 * k.practical_scale * L * s.log_term);
  const double cr = s.C * R0;
  s.batch_size = round_up(27.0 * k.practical_scale * static_cast<double>(N) * sigma2 /
                          (2.0 * cr * cr * L * L * s.log_term));
  s.provenance = "clipped-SGD convex theorem";
  return s;
}

SgdSchedule sgd_strongly_convex_params(double L, double mu, double sigma2, double r0, std::uint64_t N,
                                       double beta, const TheoremConstants& k) {
  check_positive(L, "L");
  if (!(mu > 0.0)) throw InvalidArgument("strong convexity mu must be positive (use the convex schedule)");
  check_nonnegative(sigma2, "sigma^2");
  check_positive(r0, "r0");
  SgdSchedule s;
  s.variant = SgdVariant::StronglyConvexTheorem;
  s.log_term = confidence_log(static_cast<double>(N), beta);
  s.N = N;
  s.beta = beta;
  s.L = L;
  s.mu = mu;
  s.sigma2 = sigma2;
  s.r0 = r0;
  s.gamma = 1.0 / (81.0 * k.practical_scale * L * s.log_term);
  s.contraction = 1.0 - s.gamma * mu;
  s.lambda = 4.0 * std::sqrt(L * r0);
  s.batch_scale = 27.0 * k.practical_scale;
  s.batch_size = s.batch_at(0);
  s.provenance = "clipped-SGD strongly convex theorem";
  return s;
}

SgdSchedule sgd_decaying(double gamma, double lambda0, std::uint64_t batch, std::uint64_t period, double decay) {
  if (!(decay > 0.0 && decay < 1.0)) throw InvalidArgument("decay factor must lie in (0, 1)");
  if (period == 0) throw InvalidArgument("decay period must be at least one iteration");
  SgdSchedule s = sgd_manual(gamma, lambda0, batch);
  s.variant = SgdVariant::DecayingHeuristic;
  s.period = period;
  s.decay = decay;
  s.provenance = "d-clipped-SGD heuristic";
  return s;
}

std::uint64_t d_clipped_period(std::uint64_t rows, double epochs, std::uint64_t batch) {
  if (!(epochs > 0.0)) throw InvalidArgument("epochs per decrease must be positive");
  if (batch == 0 || rows == 0) throw InvalidArgument("rows and batchsize must be positive");
  return static_cast<std::uint64_t>(std::ceil(static_cast<double>(rows) * epochs / static_cast<double>(batch)));
}

double d_clipped_update(double lambda, std::uint64_t iteration, std::uint64_t period, double decay) {
  if (!(decay > 0.0 && decay < 1.0)) throw InvalidArgument("decay factor must lie in (0, 1)");
  if (period == 0) throw InvalidArgument("decay period must be at least one iteration");
  return (iteration > 0 && iteration % period == 0) ? lambda * decay : lambda;
}

// ---------------------------------------------------------------------------
// Restarts

double restart_radius(double gap, double mu) {
  check_nonnegative(gap, "initial gap");
  check_positive(mu, "mu");
  return std::sqrt(2.0 * gap / mu);
}

std::uint64_t restart_count(double mu, double R, double epsilon) {
  check_positive(mu, "mu");
  check_positive(epsilon, "epsilon");
  const double ratio = mu * R * R / (2.0 * epsilon);
  if (ratio <= 1.0) return 0;
  return static_cast<std::uint64_t>(std::ceil(std::log2(ratio)));
}

double RestartPlan::sstm_batch_raw_at(std::uint64_t t, std::uint64_t k) const {
  const double alpha = sstm_alpha(k, a, L).alpha;
  return sstm_batch_raw(sigma2, alpha, static_cast<double>(N0), log_term, R, std::ldexp(1.0, static_cast<int>(t)),
                        constants);
}

std::uint64_t RestartPlan::sstm_batch(std::uint64_t t, std::uint64_t k) const { return round_up(sstm_batch_raw_at(t, k)); }

double RestartPlan::sgd_batch_raw_at(std::uint64_t t) const {
  const double cr = C * R;
  return std::max(1.0, 27.0 * constants.practical_scale * std::ldexp(1.0, static_cast<int>(t)) *
                           static_cast<double>(N0) * sigma2 / (2.0 * cr * cr * L * L * log_term));
}

SstmSchedule RestartPlan::inner_sstm(std::uint64_t t) const {
  if (kind != RestartKind::Sstm) throw InvalidArgument("not an SSTM restart plan");
  if (t >= tau) throw InvalidArgument("restart index out of range");
  SstmSchedule s;
  s.a = a;
  s.L = L;
  s.B = clip_parameter[t];
  s.C = C;
  s.N = N0;
  s.beta = beta;
  s.log_term = log_term;
  s.sigma2 = sigma2;
  s.R0 = R * std::pow(2.0, -0.5 * static_cast<double>(t));
  s.policy = BatchPolicy::TheoremExact;
  s.batches.resize(N0);
  for (std::uint64_t k = 0; k < N0; ++k) s.batches[k] = sstm_batch(t, k);
  s.provenance = provenance + ", restart " + std::to_string(t);
  return s;
}

SgdSchedule RestartPlan::inner_sgd(std::uint64_t t) const {
  if (kind != RestartKind::Sgd) throw InvalidArgument("not an SGD restart plan");
  if (t >= tau) throw InvalidArgument("restart index out of range");
  SgdSchedule s;
  s.variant = SgdVariant::ConvexTheorem;
  s.gamma = gamma;
  s.lambda = clip_parameter[t];
  s.batch_size = sgd_batches[t];
  s.N = N0;
  s.beta = beta;
  s.log_term = log_term;
  s.C = C;
  s.L = L;
  s.mu = mu;
  s.sigma2 = sigma2;
  s.R0 = R * std::pow(2.0, -0.5 * static_cast<double>(t));
  s.provenance = provenance + ", restart " + std::to_string(t);
  return s;
}

std::uint64_t RestartPlan::max_batch() const {
  std::uint64_t best = 1;
  if (kind == RestartKind::Sgd) {
    for (auto m : sgd_batches) best = std::max(best, m);
    return best;
  }
  // m_k^t grows with both k and t.
  if (tau > 0 && N0 > 0) best = sstm_batch(tau - 1, N0 - 1);
  return best;
}

namespace {

RestartPlan base_plan(RestartKind kind, double L, double mu, double sigma2, double R, double epsilon, double beta,
                      const TheoremConstants& k) {
  check_positive(L, "L");
  check_positive(mu, "mu");
  check_nonnegative(sigma2, "sigma^2");
  check_positive(R, "R");
  check_positive(epsilon, "epsilon");
  check_beta(beta);
  RestartPlan p;
  p.kind = kind;
  p.L = L;
  p.mu = mu;
  p.sigma2 = sigma2;
  p.R = R;
  p.epsilon = epsilon;
  p.beta = beta;
  p.constants = k;
  p.tau = restart_count(mu, R, epsilon);
  return p;
}

// Smallest N0 satisfying ln(4 N0 tau / beta) >= 2.
double min_n0_for_log(double tau, double beta) { return std::ceil(std::exp(2.0) * beta / (4.0 * tau)); }

}  // namespace

RestartPlan restart_plan_sstm(double L, double mu, double sigma2, double R, double epsilon, double beta,
                              const TheoremConstants& k) {
  RestartPlan p = base_plan(RestartKind::Sstm, L, mu, sigma2, R, epsilon, beta, k);
  p.C = kSstmC;
  p.provenance = "R-clipped-SSTM theorem";
  if (p.tau == 0) {
    p.warnings.push_back("epsilon already achieved at x0; empty restart plan");
    return p;
  }
  const double tau = static_cast<double>(p.tau);
  double l = 2.0;
  double n0 = 0.0;
  bool converged = false;
  for (int it = 1; it <= kMaxFixedPointIterations; ++it) {
    p.fixed_point_iterations = static_cast<std::uint64_t>(it);
    const double a = sstm_min_a(l, p.C);
    double next_n0 = std::max(std::ceil(p.C * std::sqrt(8.0 * a * L / mu)), min_n0_for_log(tau, beta));
    next_n0 = std::max(next_n0, 1.0);
    const double next_l = std::log(4.0 * next_n0 * tau / beta);
    if (next_n0 == n0) {
      converged = true;
      break;
    }
    n0 = next_n0;
    l = next_l;
  }
  if (!converged) throw Error("restart sizing fixed point did not converge");
  p.N0 = static_cast<std::uint64_t>(n0);
  p.log_term = l;
  p.a = sstm_min_a(l, p.C);
  for (std::uint64_t t = 0; t < p.tau; ++t) {
    p.clip_parameter.push_back(p.C * R / (8.0 * std::ldexp(1.0, static_cast<int>(t)) * l));
  }
  return p;
}

RestartPlan restart_plan_sgd(double L, double mu, double sigma2, double R, double epsilon, double beta,
                             const TheoremConstants& k) {
  RestartPlan p = base_plan(RestartKind::Sgd, L, mu, sigma2, R, epsilon, beta, k);
  p.C = kSgdC;
  p.provenance = "R-clipped-SGD theorem";
  if (p.tau == 0) {
    p.warnings.push_back("epsilon already achieved at x0; empty restart plan");
    return p;
  }
  const double tau = static_cast<double>(p.tau);
  const double slope = 320.0 * k.practical_scale * p.C * p.C * L / mu;
  double l = 2.0;
  double n0 = 0.0;
  bool converged = false;
  for (int it = 1; it <= kMaxFixedPointIterations; ++it) {
    p.fixed_point_iterations = static_cast<std::uint64_t>(it);
    const double next_n0 = std::max({std::ceil(slope * l), min_n0_for_log(tau, beta), 1.0});
    const double next_l = std::log(4.0 * next_n0 * tau / beta);
    if (next_n0 == n0) {
      converged = true;
      break;
    }
    n0 = next_n0;
    l = next_l;
  }
  if (!converged) throw Error("restart sizing fixed point did not converge");
  p.N0 = static_cast<std::uint64_t>(n0);
  p.log_term = l;
  p.gamma = 1.0 / (80.0 * k.practical_scale * L * l);
  for (std::uint64_t t = 0; t < p.tau; ++t) {
    p.clip_parameter.push_back(2.0 * L * p.C * R * std::pow(2.0, -0.5 * static_cast<double>(t)));
    p.sgd_batches.push_back(round_up(p.sgd_batch_raw_at(t)));
  }
  return p;
}

RestartPlan small_batch_restart_params(double L, double mu, double sigma2, double epsilon, double beta, double R,
                                       const TheoremConstants& k) {
  if (sigma2 == 0.0) {
    RestartPlan p = restart_plan_sstm(L, mu, sigma2, R, epsilon, beta, k);
    p.warnings.push_back("sigma = 0: constant-batch rule is degenerate; using the theorem plan (m = 1)");
    return p;
  }
  RestartPlan p = base_plan(RestartKind::Sstm, L, mu, sigma2, R, epsilon, beta, k);
  p.C = kSstmC;
  p.provenance = "R-clipped-SSTM constant-batch corollary";
  if (p.tau == 0) {
    p.warnings.push_back("epsilon already achieved at x0; empty restart plan");
    return p;
  }
  const double tau = static_cast<double>(p.tau);
  double n0 = std::max(1.0, min_n0_for_log(tau, beta));
  double a = 0.0;
  bool converged = false;
  for (int it = 1; it <= kMaxFixedPointIterations; ++it) {
    p.fixed_point_iterations = static_cast<std::uint64_t>(it);
    const double l_short = std::log(std::max(n0 * tau / beta, std::exp(1.0)));
    const double l = std::log(4.0 * n0 * tau / beta);
    a = std::max(k.theta_a * sigma2 * sigma2 * l_short * l_short / (L * mu * epsilon * epsilon), sstm_min_a(l, p.C));
    const double next_n0 = std::max({std::ceil(k.theta_n0 * std::sqrt(a * L / mu)),
                                     std::ceil(p.C * std::sqrt(8.0 * a * L / mu)), min_n0_for_log(tau, beta)});
    if (next_n0 == n0) {
      converged = true;
      break;
    }
    n0 = next_n0;
  }
  if (!converged) throw Error("constant-batch restart fixed point did not converge in 100 iterations");
  p.N0 = static_cast<std::uint64_t>(n0);
  p.log_term = std::log(4.0 * n0 * tau / beta);
  p.a = a;
  for (std::uint64_t t = 0; t < p.tau; ++t) {
    p.clip_parameter.push_back(p.C * R / (8.0 * std::ldexp(1.0, static_cast<int>(t)) * p.log_term));
  }
  return p;
}

}  // namespace heavyclip
