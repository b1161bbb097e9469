#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "heavyclip/core.hpp"
#include "heavyclip/schedules.hpp"

namespace heavyclip {

/// Clipped-SSTM state. y = z = x0 and A = 0 at the start.
struct SstmState {
  Vector x;
  Vector y;
  Vector z;
  double A = 0.0;
  std::uint64_t k = 0;
  std::uint64_t oracle_calls = 0;
  std::uint64_t clip_activations = 0;
  Vector g;  // scratch

  explicit SstmState(const Vector& x0);
};

/// Clipped-SGD state with a compensated running sum of x^0 .. x^{k-1}.
struct SgdState {
  Vector x;
  Vector sum;
  Vector compensation;
  std::uint64_t k = 0;
  std::uint64_t oracle_calls = 0;
  std::uint64_t clip_activations = 0;
  /// Current level of the decaying heuristic.
  double lambda = kInfinity;
  Vector g;  // scratch

  SgdState(const Vector& x0, const SgdSchedule& schedule);
  /// (1/k) sum_{j<k} x^j; x^0 before the first step.
  Vector average() const;
};

struct StepReport {
  std::uint64_t k = 0;  // iteration index after the step
  double f_gap = std::numeric_limits<double>::quiet_NaN();
  double dist = std::numeric_limits<double>::quiet_NaN();
  /// Norm of the mini-batch gradient before clipping.
  double grad_norm_estimate = 0.0;
  std::uint64_t m = 0;
  double lambda = kInfinity;
  bool clipped = false;
  double seconds = 0.0;
};

struct TrajectoryRecord {
  std::uint64_t k = 0;
  double f_gap = 0.0;
  double dist = 0.0;
  std::uint64_t calls = 0;
  double lambda = 0.0;
  /// Cumulative clip activations.
  std::uint64_t clipped = 0;
  std::uint64_t m = 0;
};

struct Trajectory {
  std::vector<TrajectoryRecord> records;
  std::uint64_t steps = 0;
  std::uint64_t oracle_calls = 0;
  std::uint64_t clip_activations = 0;
  bool aborted = false;
  std::uint64_t abort_step = 0;
  std::string abort_reason;

  std::vector<double> f_gaps() const;
};

/// One clipped-SSTM iteration; `rng` supplies this iteration's draws.
/// Throws NonFiniteError if the gradient or iterates stop being finite.
StepReport sstm_step(SstmState& state, const StochasticOracle& oracle, const SstmSchedule& schedule, RngStream& rng);

/// One (clipped-)SGD iteration.
StepReport clipped_sgd_step(SgdState& state, const StochasticOracle& oracle, const SgdSchedule& schedule,
                            RngStream& rng);

struct RunResult {
  /// y^N for SSTM; the average for convex SGD variants; x^N otherwise.
  Vector output;
  Vector last;
  Trajectory trajectory;
};

/// Iteration k draws from rng.child(k). Records the initial point and every
/// `record_every`-th iterate plus the final one (ceil(N/record_every) + 1 records).
RunResult run_sgd(const StochasticOracle& oracle, const SgdSchedule& schedule, const Vector& x0, std::uint64_t N,
                  const RngStream& rng, std::uint64_t record_every = 1);

RunResult run_sstm(const StochasticOracle& oracle, const SstmSchedule& schedule, const Vector& x0,
                   std::uint64_t N, const RngStream& rng, std::uint64_t record_every = 1);

/// True when the SGD variant's theorem is stated for the average iterate.
bool returns_average(const SgdSchedule& schedule);

/// CSV with header k,f_gap,dist,calls,lambda,clipped,m.
void write_trajectory_csv(const Trajectory& trajectory, std::ostream& out);

}  // namespace heavyclip
