#pragma once

#include <cstdint>
#include <vector>

#include "heavyclip/optimizers.hpp"
#include "heavyclip/schedules.hpp"

namespace heavyclip {

/// Outcome of one restart stage.
struct RestartSummary {
  std::uint64_t t = 0;
  /// B_t for SSTM stages, lambda_t for SGD stages.
  double clip_parameter = 0.0;
  /// Largest batch used in the stage (m^t for SGD).
  std::uint64_t m = 0;
  /// f(x^_{t+1}) - f* after the stage.
  double f_gap = 0.0;
  /// Cumulative oracle calls at the end of the stage.
  std::uint64_t calls = 0;
};

struct RestartResult {
  Vector x;  // x^_tau, or the last finished stage's output after an abort
  double initial_gap = 0.0;
  std::vector<Trajectory> runs;
  std::vector<RestartSummary> summary;
  std::uint64_t oracle_calls = 0;
  bool aborted = false;

  /// f-gaps at x^_0 .. x^_t for the finished stages.
  std::vector<double> boundary_gaps() const;
};

/// Stage t runs clipped-SSTM from x^_t with rng.child(t).
RestartResult run_restarted_sstm(const StochasticOracle& oracle, const RestartPlan& plan, const Vector& x0,
                                 const RngStream& rng, std::uint64_t record_every = 1);

/// Stage t runs convex clipped-SGD with lambda_t, m^t and returns its average.
RestartResult run_restarted_sgd(const StochasticOracle& oracle, const RestartPlan& plan, const Vector& x0,
                                const RngStream& rng, std::uint64_t record_every = 1);

}  // namespace heavyclip
