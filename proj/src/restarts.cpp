#include "heavyclip/restarts.hpp"

#include <algorithm>

namespace heavyclip {

std::vector<double> RestartResult::boundary_gaps() const {
  std::vector<double> out{initial_gap};
  for (const auto& s : summary) out.push_back(s.f_gap);
  return out;
}

namespace {

template <typename Inner>
RestartResult run_restarts(const StochasticOracle& oracle, const RestartPlan& plan, const Vector& x0,
                           const RngStream& rng, Inner inner) {
  check_dimension(oracle, x0);
  if (!(oracle.strong_convexity() > 0.0)) throw InvalidArgument("restarted methods need a strongly convex problem");
  RestartResult result;
  result.x = x0;
  result.initial_gap = suboptimality(oracle, x0);
  for (std::uint64_t t = 0; t < plan.tau; ++t) {
    RestartSummary s;
    s.t = t;
    RunResult run = inner(t, result.x, rng.child(t), s);
    result.oracle_calls += run.trajectory.oracle_calls;
    const bool aborted = run.trajectory.aborted;
    result.runs.push_back(std::move(run.trajectory));
    if (aborted) {
      result.aborted = true;
      break;
    }
    result.x = std::move(run.output);
    s.f_gap = suboptimality(oracle, result.x);
    s.calls = result.oracle_calls;
    result.summary.push_back(s);
  }
  return result;
}

}  // namespace

RestartResult run_restarted_sstm(const StochasticOracle& oracle, const RestartPlan& plan, const Vector& x0,
                                 const RngStream& rng, std::uint64_t record_every) {
  if (plan.kind != RestartKind::Sstm) throw InvalidArgument("plan was not built for R-clipped-SSTM");
  return run_restarts(oracle, plan, x0, rng,
                      [&](std::uint64_t t, const Vector& start, const RngStream& stage_rng, RestartSummary& s) {
                        const SstmSchedule schedule = plan.inner_sstm(t);
                        s.clip_parameter = schedule.B;
                        s.m = *std::max_element(schedule.batches.begin(), schedule.batches.end());
                        return run_sstm(oracle, schedule, start, plan.N0, stage_rng, record_every);
                      });
}

RestartResult run_restarted_sgd(const StochasticOracle& oracle, const RestartPlan& plan, const Vector& x0,
                                const RngStream& rng, std::uint64_t record_every) {
  if (plan.kind != RestartKind::Sgd) throw InvalidArgument("plan was not built for R-clipped-SGD");
  return run_restarts(oracle, plan, x0, rng,
                      [&](std::uint64_t t, const Vector& start, const RngStream& stage_rng, RestartSummary& s) {
                        const SgdSchedule schedule = plan.inner_sgd(t);
                        s.clip_parameter = schedule.lambda;
                        s.m = schedule.batch_size;
                        return run_sgd(oracle, schedule, start, plan.N0, stage_rng, record_every);
                      });
}

}  // namespace heavyclip
