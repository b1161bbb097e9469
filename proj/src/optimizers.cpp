#include "heavyclip/optimizers.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ostream>

#include "heavyclip/clipping.hpp"

namespace heavyclip {

SstmState::SstmState(const Vector& x0) : x(x0), y(x0), z(x0), g(x0.size()) {
  if (!all_finite(x0)) throw InvalidArgument("starting point must be finite");
}

SgdState::SgdState(const Vector& x0, const SgdSchedule& schedule)
    : x(x0),
      sum(Vector::Zero(x0.size())),
      compensation(Vector::Zero(x0.size())),
      lambda(schedule.lambda),
      g(x0.size()) {
  if (!all_finite(x0)) throw InvalidArgument("starting point must be finite");
}

Vector SgdState::average() const {
  if (k == 0) return x;
  return (sum + compensation) / static_cast<double>(k);
}

std::vector<double> Trajectory::f_gaps() const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.f_gap);
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

// Neumaier summation, coordinatewise.
void accumulate(Vector& sum, Vector& comp, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double t = sum[i] + v[i];
    if (std::abs(sum[i]) >= std::abs(v[i])) {
      comp[i] += (sum[i] - t) + v[i];
    } else {
      comp[i] += (v[i] - t) + sum[i];
    }
    sum[i] = t;
  }
}

void require_finite(const Vector& v, const char* what, std::uint64_t k) {
  if (!all_finite(v)) throw NonFiniteError(std::string("non-finite ") + what, k);
}

TrajectoryRecord make_record(const StochasticOracle& oracle, const Vector& point, std::uint64_t k,
                             std::uint64_t calls, double lambda, std::uint64_t clipped, std::uint64_t m) {
  TrajectoryRecord r;
  r.k = k;
  r.f_gap = suboptimality(oracle, point);
  r.dist = distance_to_optimum(oracle, point);
  r.calls = calls;
  r.lambda = lambda;
  r.clipped = clipped;
  r.m = m;
  return r;
}

bool should_record(std::uint64_t k, std::uint64_t N, std::uint64_t every) { return k % every == 0 || k == N; }

}  // namespace

StepReport sstm_step(SstmState& s, const StochasticOracle& oracle, const SstmSchedule& schedule, RngStream& rng) {
  const auto start = Clock::now();
  const std::uint64_t k = s.k;
  const double alpha = schedule.alpha(k);
  // Closed form keeps A exact over long runs; the weights sum to 1 by construction.
  const double A_next = schedule.A_next(k);
  const double w_new = alpha / A_next;
  const double w_old = 1.0 - w_new;
  const std::uint64_t m = schedule.batch(k);
  const double lambda = schedule.clip_level(k);

  s.x = w_old * s.y + w_new * s.z;
  minibatch_gradient_into(oracle, s.x, m, rng, s.g);
  require_finite(s.g, "stochastic gradient", k);

  StepReport r;
  r.grad_norm_estimate = s.g.norm();
  r.clipped = clip_in_place(s.g, lambda);
  s.z.noalias() -= alpha * s.g;
  s.y = w_old * s.y + w_new * s.z;
  require_finite(s.z, "z iterate", k);
  require_finite(s.y, "y iterate", k);

  s.A = A_next;
  s.k = k + 1;
  s.oracle_calls += m;
  if (r.clipped) ++s.clip_activations;
  r.k = s.k;
  r.m = m;
  r.lambda = lambda;
  r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return r;
}

StepReport clipped_sgd_step(SgdState& s, const StochasticOracle& oracle, const SgdSchedule& schedule,
                            RngStream& rng) {
  const auto start = Clock::now();
  const std::uint64_t k = s.k;
  double lambda;
  if (schedule.variant == SgdVariant::DecayingHeuristic) {
    s.lambda = d_clipped_update(s.lambda, k, schedule.period, schedule.decay);
    lambda = s.lambda;
  } else {
    lambda = schedule.lambda_at(k);
  }
  const std::uint64_t m = schedule.batch_at(k);

  minibatch_gradient_into(oracle, s.x, m, rng, s.g);
  require_finite(s.g, "stochastic gradient", k);

  StepReport r;
  r.grad_norm_estimate = s.g.norm();
  r.clipped = clip_in_place(s.g, lambda);
  accumulate(s.sum, s.compensation, s.x);
  s.x.noalias() -= schedule.gamma * s.g;
  require_finite(s.x, "iterate", k);

  s.k = k + 1;
  s.oracle_calls += m;
  if (r.clipped) ++s.clip_activations;
  r.k = s.k;
  r.m = m;
  r.lambda = lambda;
  r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return r;
}

bool returns_average(const SgdSchedule& schedule) {
  return schedule.variant == SgdVariant::ConvexTheorem || schedule.variant == SgdVariant::Manual;
}

RunResult run_sgd(const StochasticOracle& oracle, const SgdSchedule& schedule, const Vector& x0, std::uint64_t N,
                  const RngStream& rng, std::uint64_t record_every) {
  if (N == 0) throw InvalidArgument("N must be at least 1");
  if (record_every == 0) throw InvalidArgument("record_every must be at least 1");
  check_dimension(oracle, x0);
  SgdState s(x0, schedule);
  RunResult out;
  Trajectory& tr = out.trajectory;
  tr.records.push_back(make_record(oracle, s.x, 0, 0, schedule.lambda_at(0), 0, schedule.batch_at(0)));
  for (std::uint64_t k = 0; k < N; ++k) {
    RngStream step_rng = rng.child(k);
    StepReport r;
    try {
      r = clipped_sgd_step(s, oracle, schedule, step_rng);
    } catch (const NonFiniteError& e) {
      tr.aborted = true;
      tr.abort_step = e.step();
      tr.abort_reason = e.what();
      break;
    }
    if (should_record(r.k, N, record_every)) {
      tr.records.push_back(make_record(oracle, s.x, r.k, s.oracle_calls, r.lambda, s.clip_activations, r.m));
    }
  }
  tr.steps = s.k;
  tr.oracle_calls = s.oracle_calls;
  tr.clip_activations = s.clip_activations;
  out.last = s.x;
  out.output = returns_average(schedule) ? s.average() : s.x;
  return out;
}

RunResult run_sstm(const StochasticOracle& oracle, const SstmSchedule& schedule, const Vector& x0,
                   std::uint64_t N, const RngStream& rng, std::uint64_t record_every) {
  if (N == 0) throw InvalidArgument("N must be at least 1");
  if (record_every == 0) throw InvalidArgument("record_every must be at least 1");
  check_dimension(oracle, x0);
  SstmState s(x0);
  RunResult out;
  Trajectory& tr = out.trajectory;
  tr.records.push_back(make_record(oracle, s.y, 0, 0, schedule.clip_level(0), 0, schedule.batch(0)));
  for (std::uint64_t k = 0; k < N; ++k) {
    RngStream step_rng = rng.child(k);
    StepReport r;
    try {
      r = sstm_step(s, oracle, schedule, step_rng);
    } catch (const NonFiniteError& e) {
      tr.aborted = true;
      tr.abort_step = e.step();
      tr.abort_reason = e.what();
      break;
    }
    if (should_record(r.k, N, record_every)) {
      tr.records.push_back(make_record(oracle, s.y, r.k, s.oracle_calls, r.lambda, s.clip_activations, r.m));
    }
  }
  tr.steps = s.k;
  tr.oracle_calls = s.oracle_calls;
  tr.clip_activations = s.clip_activations;
  out.last = s.y;
  out.output = s.y;
  return out;
}

namespace {

// Shortest round-trip representation, so reruns compare byte for byte.
void put_double(std::ostream& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, res.ptr - buf);
}

}  // namespace

void write_trajectory_csv(const Trajectory& trajectory, std::ostream& out) {
  out << "k,f_gap,dist,calls,lambda,clipped,m\n";
  for (const auto& r : trajectory.records) {
    out << r.k << ',';
    put_double(out, r.f_gap);
    out << ',';
    put_double(out, r.dist);
    out << ',' << r.calls << ',';
    put_double(out, r.lambda);
    out << ',' << r.clipped << ',' << r.m << '\n';
  }
}

}  // namespace heavyclip
