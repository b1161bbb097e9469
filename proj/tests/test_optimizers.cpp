#include <doctest.h>

#include <cmath>
#include <sstream>

#include "heavyclip/optimizers.hpp"
#include "heavyclip/problems.hpp"

using namespace heavyclip;

namespace {

Vector v1(double a) { return Vector::Constant(1, a); }

}  // namespace

TEST_CASE("clipped-SGD hand-computed steps") {
  const QuadraticToyProblem toy(1, NoiseModel::none());
  RngStream r(0, 0);
  SUBCASE("geometric contraction") {
    const SgdSchedule s = sgd_manual(0.5, 10, 1);
    SgdState st(v1(1), s);
    clipped_sgd_step(st, toy, s, r);
    CHECK(st.x[0] == 0.5);
    clipped_sgd_step(st, toy, s, r);
    CHECK(st.x[0] == 0.25);
  }
  SUBCASE("clip binds") {
    const SgdSchedule s = sgd_manual(0.5, 1, 1);
    SgdState st(v1(100), s);
    const StepReport rep = clipped_sgd_step(st, toy, s, r);
    CHECK(st.x[0] == 99.5);
    CHECK(rep.clipped);
    CHECK(st.clip_activations == 1);
  }
  SUBCASE("zero stepsize") {
    const SgdSchedule s = sgd_manual(0.0, 1, 1);
    SgdState st(v1(3), s);
    clipped_sgd_step(st, toy, s, r);
    CHECK(st.x[0] == 3);
  }
}

TEST_CASE("SSTM one step at a = 1 lands on the optimum") {
  const QuadraticToyProblem toy(3, NoiseModel::none());
  const Vector x0 = Vector::LinSpaced(3, 1, 3);
  const SstmSchedule s = sstm_manual(1, 1, kInfinity, 1, 1);
  SstmState st(x0);
  RngStream r(0, 0);
  sstm_step(st, toy, s, r);
  CHECK(st.x == x0);
  CHECK(st.z.norm() == 0.0);
  CHECK(st.y.norm() == 0.0);
  CHECK(st.A == 1.0);
  const RunResult run = run_sstm(toy, s, x0, 1, RngStream(1, 1), 1);
  CHECK(run.output.norm() == 0.0);
}

TEST_CASE("SSTM clipped step moves z by exactly B") {
  const QuadraticToyProblem toy(4, NoiseModel::none());
  const Vector x0 = Vector::Constant(4, 10);
  const double B = 0.3;
  const SstmSchedule s = sstm_manual(2, 1, B, 1, 50);
  SstmState st(x0);
  RngStream r(0, 0);
  for (int k = 0; k < 50; ++k) {
    const Vector z = st.z;
    const StepReport rep = sstm_step(st, toy, s, r);
    // The difference itself carries rounding of order eps * ||z||.
    CHECK((st.z - z).norm() <= B + 1e-14 * (1 + z.norm()));
    if (rep.clipped) CHECK((st.z - z).norm() == doctest::Approx(B).epsilon(1e-14));
  }
  CHECK(st.clip_activations > 0);
}

TEST_CASE("SSTM iterates are convex combinations") {
  const QuadraticToyProblem toy(5, NoiseModel::burr());
  const SstmSchedule s = sstm_manual(30, 1, 0.5, 2, 300);
  SstmState st(Vector::Constant(5, 2));
  for (std::uint64_t k = 0; k < 300; ++k) {
    const double alpha = s.alpha(k);
    const double A_next = s.A_next(k);
    const double w_old = st.A / A_next;
    const double w_new = alpha / A_next;
    CHECK(w_old >= 0.0);
    CHECK(w_new <= 1.0);
    CHECK(w_old + w_new == doctest::Approx(1.0).epsilon(1e-12));
    RngStream r(9, k);
    sstm_step(st, toy, s, r);
  }
  CHECK(st.oracle_calls == 600);
}

TEST_CASE("deterministic accelerated rate") {
  const QuadraticToyProblem toy(10, NoiseModel::none());
  const Vector x0 = Vector::Ones(10);
  const double R0 = x0.norm();
  for (std::uint64_t N : {10u, 100u, 1000u}) {
    const SstmSchedule s = sstm_theorem_params(1, 0, R0, N, 0.05);
    const RunResult run = run_sstm(toy, s, x0, N, RngStream(0, N), N);
    CHECK(suboptimality(toy, run.output) <= 2 * s.a * s.C * s.C * R0 * R0 / (double(N) * (N + 3)));
    CHECK(run.trajectory.clip_activations == 0);
  }
}

TEST_CASE("run_sgd bookkeeping") {
  const QuadraticToyProblem toy(3, NoiseModel::gaussian());
  const Vector x0 = Vector::Ones(3);
  SUBCASE("N = 1 returns x0 as the average") {
    const RunResult r = run_sgd(toy, sgd_manual(0.1, 5, 1), x0, 1, RngStream(0, 0), 1);
    CHECK(r.output == x0);
    CHECK(r.last != x0);
  }
  SUBCASE("record grid and oracle accounting") {
    const RunResult r = run_sgd(toy, sgd_manual(0.1, 5, 3), x0, 100, RngStream(0, 0), 7);
    CHECK(r.trajectory.records.size() == 1 + 14 + 1);  // 0, 7..98, 100
    CHECK(r.trajectory.records.front().k == 0);
    CHECK(r.trajectory.records.back().k == 100);
    CHECK(r.trajectory.oracle_calls == 300);
    CHECK(r.trajectory.records.back().calls == 300);
    const RunResult once = run_sgd(toy, sgd_manual(0.1, 5, 1), x0, 50, RngStream(0, 0), 50);
    CHECK(once.trajectory.records.size() == 2);
  }
  CHECK_THROWS_AS(run_sgd(toy, sgd_manual(0.1, 5, 1), x0, 0, RngStream(0, 0), 1), InvalidArgument);
  CHECK_THROWS_AS(run_sgd(toy, sgd_manual(0.1, 5, 1), x0, 5, RngStream(0, 0), 0), InvalidArgument);
  CHECK_THROWS_AS(run_sgd(toy, sgd_manual(0.1, 5, 1), Vector::Ones(2), 5, RngStream(0, 0), 1), DimensionMismatch);
  Vector bad = x0;
  bad[0] = INFINITY;
  CHECK_THROWS_AS(run_sgd(toy, sgd_manual(0.1, 5, 1), bad, 5, RngStream(0, 0), 1), InvalidArgument);
}

TEST_CASE("the average uses compensated summation") {
  const QuadraticToyProblem toy(1, NoiseModel::none());
  // gamma = 0 keeps x fixed; the average must reproduce it exactly.
  const Vector x0 = v1(0.1);
  const RunResult r = run_sgd(toy, sgd_manual(0.0, 1, 1), x0, 1000000, RngStream(0, 0), 1000000);
  CHECK(r.output[0] == 0.1);
}

TEST_CASE("bounded updates and monotone descent") {
  const QuadraticToyProblem quiet(4, NoiseModel::none());
  SgdSchedule s = sgd_manual(1.0, kInfinity, 1);
  SgdState st(Vector::LinSpaced(4, -3, 5), s);
  double f = value(quiet, st.x);
  for (std::uint64_t k = 0; k < 20; ++k) {
    RngStream r(0, k);
    clipped_sgd_step(st, quiet, s, r);
    const double next = value(quiet, st.x);
    CHECK(next <= f + 1e-12);
    f = next;
  }
  const QuadraticToyProblem noisy(4, NoiseModel::weibull());
  s = sgd_manual(0.3, 0.7, 2);
  SgdState sn(Vector::Ones(4), s);
  for (std::uint64_t k = 0; k < 2000; ++k) {
    const Vector x = sn.x;
    RngStream r(1, k);
    clipped_sgd_step(sn, noisy, s, r);
    CHECK((sn.x - x).norm() <= 0.3 * 0.7 * (1 + 1e-15));
  }
}

TEST_CASE("infinite clip level is plain SGD, bit for bit") {
  const QuadraticToyProblem toy(6, NoiseModel::burr());
  const Vector x0 = Vector::Ones(6);
  const RngStream rng(5, 5);
  const RunResult r = run_sgd(toy, sgd_manual(0.05, kInfinity, 2), x0, 500, rng, 1);
  Vector x = x0, g;
  for (std::uint64_t k = 0; k < 500; ++k) {
    RngStream step = rng.child(k);
    minibatch_gradient_into(toy, x, 2, step, g);
    x -= 0.05 * g;
    CHECK(r.trajectory.records[k + 1].f_gap == suboptimality(toy, x));
  }
  CHECK(r.last == x);
  CHECK(r.trajectory.clip_activations == 0);
}

TEST_CASE("strongly convex schedule contracts deterministically") {
  const QuadraticToyProblem toy(3, NoiseModel::none());
  const Vector x0 = Vector::Constant(3, 2);
  const double r0 = suboptimality(toy, x0);
  const SgdSchedule s = sgd_strongly_convex_params(1, 1, 0, r0, 500, 0.05);
  const RunResult run = run_sgd(toy, s, x0, 500, RngStream(0, 0), 1);
  CHECK_FALSE(returns_average(s));
  CHECK(run.output == run.last);
  CHECK(suboptimality(toy, run.output) <= std::pow(1 - s.gamma, 500) * r0);
  CHECK(run.trajectory.clip_activations == 0);
}

TEST_CASE("decaying heuristic lowers the level at period boundaries") {
  const QuadraticToyProblem toy(2, NoiseModel::gaussian());
  const SgdSchedule s = sgd_decaying(0.01, 8, 1, 10, 0.5);
  const RunResult r = run_sgd(toy, s, Vector::Ones(2), 35, RngStream(0, 0), 1);
  CHECK(r.trajectory.records[10].lambda == 8);
  CHECK(r.trajectory.records[11].lambda == 4);
  CHECK(r.trajectory.records[31].lambda == 1);
}

TEST_CASE("non-finite gradients abort the trial") {
  // A problem whose stochastic gradient overflows.
  class Exploding final : public StochasticOracle {
   public:
    std::size_t dimension() const override { return 1; }
    double smoothness() const override { return 1; }
    double strong_convexity() const override { return 0; }
    double variance_bound() const override { return 1; }
    const std::optional<Optimum>& optimum() const override { return opt_; }
    double value_unchecked(const Vector& x) const override { return 0.5 * x.squaredNorm(); }
    void full_gradient_into(const Vector& x, Vector& out) const override { out = x; }
    void add_sample_gradient(const Vector& x, RngStream& rng, Vector& acc) const override {
      acc += x;
      if (rng.uniform_open() < 0.05) acc[0] += 1e308 * 10;
    }

   private:
    std::optional<Optimum> opt_ = Optimum{Vector::Zero(1), 0.0};
  } boom;
  const RunResult r = run_sgd(boom, sgd_manual(0.1, 1, 1), v1(1), 1000, RngStream(0, 0), 1);
  CHECK(r.trajectory.aborted);
  CHECK(r.trajectory.steps < 1000);
  CHECK(r.trajectory.abort_step == r.trajectory.steps);
  CHECK(r.trajectory.abort_reason.find("non-finite") != std::string::npos);
  const RunResult s = run_sstm(boom, sstm_manual(1, 1, 1, 1, 1000), v1(1), 1000, RngStream(0, 0), 1);
  CHECK(s.trajectory.aborted);
}

TEST_CASE("trajectory csv schema") {
  Trajectory t;
  t.records.push_back({0, 0.5, 1.0, 0, kInfinity, 0, 1});
  t.records.push_back({3, 0.1, 0.25, 6, 2.5, 1, 2});
  std::ostringstream out;
  write_trajectory_csv(t, out);
  CHECK(out.str() == "k,f_gap,dist,calls,lambda,clipped,m\n0,0.5,1,0,inf,0,1\n3,0.1,0.25,6,2.5,1,2\n");
}
