#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "heavyclip/core.hpp"

namespace heavyclip {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// C for the accelerated method's theorems.
inline const double kSstmC = 2.2360679774997896964;  // sqrt(5)
/// C for the SGD theorems.
inline const double kSgdC = 1.4142135623730950488;  // sqrt(2)

/// Knobs over the theorem constants.
///
/// `practical_scale` multiplies the numeric constants 6000, 10368, 27, 80,
/// 81 and 320 (batchsize, stepsize and restart-length formulas); C is never
/// scaled. `theta_a` and `theta_n0` are the order constants of the
/// constant-batch restart rule.
struct TheoremConstants {
  double practical_scale = 1.0;
  double theta_a = 1.0;
  double theta_n0 = 1.0;
};

/// ln(4N/beta); throws unless beta in (0,1), N >= 1 and the value is >= 2.
double confidence_log(double n_iterations, double beta);

struct AlphaPair {
  double alpha;  // alpha_{k+1} = (k+2)/(2aL)
  double A;      // A_{k+1} = (k+1)(k+4)/(4aL)
};

AlphaPair sstm_alpha(std::uint64_t k, double a, double L);

/// max{1, 16 l / C, 36 (2 l + sqrt(4 l^2 + 2 l))^2} for l = ln(4N/beta).
double sstm_min_a(double log_term, double C = kSstmC);

/// Real-valued batchsize max{1, 6000 s^2 alpha^2 N l /(C^2 R^2), 10368 s^2 alpha^2 N /(C^2 R^2)},
/// with the 2^t restart factor folded into `restart_factor`.
double sstm_batch_raw(double sigma2, double alpha, double n_iterations, double log_term, double radius,
                      double restart_factor = 1.0, const TheoremConstants& k = {});

enum class BatchPolicy { TheoremExact, MediumBatch, ConstantBatch, Combined, Manual };

std::string to_string(BatchPolicy policy);
BatchPolicy batch_policy_from_string(const std::string& name);

/// Parameters of one clipped-SSTM run. B = +inf disables clipping.
struct SstmSchedule {
  double a = 1.0;
  double L = 1.0;
  double B = kInfinity;
  double C = kSstmC;
  std::uint64_t N = 0;
  double beta = 0.0;
  double log_term = 0.0;
  double sigma2 = 0.0;
  double R0 = 0.0;
  double a0 = 0.0;
  BatchPolicy policy = BatchPolicy::Manual;
  /// m_k for k = 0..N-1.
  std::vector<std::uint64_t> batches;
  std::vector<std::string> warnings;
  std::string provenance;

  double alpha(std::uint64_t k) const { return sstm_alpha(k, a, L).alpha; }
  double A_next(std::uint64_t k) const { return sstm_alpha(k, a, L).A; }
  /// lambda_{k+1} = B / alpha_{k+1}.
  double clip_level(std::uint64_t k) const { return B / alpha(k); }
  std::uint64_t batch(std::uint64_t k) const;
};

/// Hand-set schedule (the experiments' tuned a, B and constant m).
SstmSchedule sstm_manual(double a, double L, double B, std::uint64_t batch, std::uint64_t N);

/// Convex clipped-SSTM theorem: C = sqrt 5, B = C R0/(8 l), a = sstm_min_a(l), m_k per formula.
SstmSchedule sstm_theorem_params(double L, double sigma2, double R0, std::uint64_t N, double beta,
                                 const TheoremConstants& k = {});

/// Stepsize policies: Medium (a = N l), Constant (a = a0 N^{3/2} sqrt l, a0 defaults to
/// sigma/(L R0)) and Combined (a = max{a', sigma N^{3/2} sqrt l/(L R0)}). A policy whose
/// a does not dominate the theorem's minimum falls back to TheoremExact with a warning.
SstmSchedule sstm_batch_policy(BatchPolicy policy, double L, double sigma2, double R0, std::uint64_t N,
                               double beta, std::optional<double> a0 = std::nullopt,
                               const TheoremConstants& k = {});

enum class SgdVariant { Manual, ConvexTheorem, StronglyConvexTheorem, DecayingHeuristic };

std::string to_string(SgdVariant variant);

/// Parameters of one (clipped-)SGD run. lambda = +inf disables clipping.
struct SgdSchedule {
  SgdVariant variant = SgdVariant::Manual;
  double gamma = 0.0;
  double lambda = kInfinity;  // constant level, or lambda_0 for decaying variants
  std::uint64_t batch_size = 1;
  std::uint64_t N = 0;
  double beta = 0.0;
  double log_term = 0.0;
  double C = kSgdC;
  double L = 0.0;
  double mu = 0.0;
  double sigma2 = 0.0;
  double R0 = 0.0;
  double r0 = 0.0;
  // Strongly convex: per-step contraction 1 - gamma mu of the clip level's square.
  double contraction = 1.0;
  double batch_scale = 27.0;
  // Decaying heuristic: multiply by `decay` every `period` iterations.
  double decay = 1.0;
  std::uint64_t period = 0;
  std::string provenance;

  /// Clip level used at iteration k (0-based).
  double lambda_at(std::uint64_t k) const;
  std::uint64_t batch_at(std::uint64_t k) const;
  /// Real-valued batchsize before rounding up.
  double batch_raw(std::uint64_t k) const;
};

SgdSchedule sgd_manual(double gamma, double lambda, std::uint64_t batch);

/// Convex clipped-SGD theorem: lambda = 2 L C R0, gamma = 1/(80 L l),
/// m = max{1, 27 N sigma^2 / (2 (C R0)^2 L^2 l)}, C = sqrt 2.
SgdSchedule sgd_theorem_params(double L, double sigma2, double R0, std::uint64_t N, double beta,
                               const TheoremConstants& k = {});

/// Strongly convex clipped-SGD: gamma = 1/(81 L l), lambda_l = 4 sqrt(L (1-gamma mu)^l r0),
/// m_k = max{1, 27 N sigma^2 / (16 L r0 (1-gamma mu)^k l)}.
SgdSchedule sgd_strongly_convex_params(double L, double mu, double sigma2, double r0, std::uint64_t N,
                                       double beta, const TheoremConstants& k = {});

/// Periodically decreasing clip level: lambda_0 * decay^floor(k/period).
SgdSchedule sgd_decaying(double gamma, double lambda0, std::uint64_t batch, std::uint64_t period, double decay);

/// Iterations per clip-level decrease for a finite sum of `rows` samples:
/// ceil(rows * epochs / batch).
std::uint64_t d_clipped_period(std::uint64_t rows, double epochs, std::uint64_t batch);

/// lambda * decay when `iteration` is a positive multiple of `period`,
/// lambda otherwise.
double d_clipped_update(double lambda, std::uint64_t iteration, std::uint64_t period, double decay);

enum class RestartKind { Sstm, Sgd };

/// Fixed-schedule restarts: tau runs of N0 inner iterations each.
struct RestartPlan {
  RestartKind kind = RestartKind::Sstm;
  std::uint64_t N0 = 0;
  std::uint64_t tau = 0;
  double R = 0.0;
  double L = 0.0;
  double mu = 0.0;
  double sigma2 = 0.0;
  double epsilon = 0.0;
  double beta = 0.0;
  double C = 0.0;
  double log_term = 0.0;  // ln(4 N0 tau / beta)
  double a = 0.0;         // SSTM stepsize parameter
  double gamma = 0.0;     // SGD stepsize
  TheoremConstants constants;
  /// B_t (SSTM) or lambda_t (SGD) for t = 0..tau-1.
  std::vector<double> clip_parameter;
  /// m^t for SGD restarts.
  std::vector<std::uint64_t> sgd_batches;
  std::uint64_t fixed_point_iterations = 0;
  std::vector<std::string> warnings;
  std::string provenance;

  /// m_k^t for SSTM restarts.
  std::uint64_t sstm_batch(std::uint64_t t, std::uint64_t k) const;
  double sstm_batch_raw_at(std::uint64_t t, std::uint64_t k) const;
  double sgd_batch_raw_at(std::uint64_t t) const;
  SstmSchedule inner_sstm(std::uint64_t t) const;
  SgdSchedule inner_sgd(std::uint64_t t) const;
  /// max over t, k of the inner batchsizes.
  std::uint64_t max_batch() const;
};

/// ceil(log2(mu R^2 / (2 eps))), or 0 when eps >= mu R^2 / 2.
std::uint64_t restart_count(double mu, double R, double epsilon);

/// R-clipped-SSTM: N0 = ceil(C sqrt(8 a L/mu)) jointly with l = ln(4 N0 tau/beta) >= 2
/// (fixed-point iteration), B_t = C R/(8 2^t l), m_k^t with the 2^t factor.
RestartPlan restart_plan_sstm(double L, double mu, double sigma2, double R, double epsilon, double beta,
                              const TheoremConstants& k = {});

/// R-clipped-SGD: N0 / l >= 320 C^2 L/mu, gamma = 1/(80 L l),
/// m^t = max{1, 27 2^t N0 sigma^2/(2 (C R)^2 L^2 l)}, lambda_t = 2 L C R 2^{-t/2}.
RestartPlan restart_plan_sgd(double L, double mu, double sigma2, double R, double epsilon, double beta,
                             const TheoremConstants& k = {});

/// Constant-batch restart rule: a = theta_a sigma^4 ln^2(N0 tau/beta)/(L mu eps^2),
/// N0 = theta_n0 sqrt(a L/mu), solved jointly and kept inside the theorem's conditions.
/// sigma = 0 falls back to `restart_plan_sstm`.
RestartPlan small_batch_restart_params(double L, double mu, double sigma2, double epsilon, double beta, double R,
                                       const TheoremConstants& k = {});

/// R = sqrt(2 (f(x0) - f*) / mu).
double restart_radius(double gap, double mu);

}  // namespace heavyclip
