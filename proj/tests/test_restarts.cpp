#include <doctest.h>

#include <cmath>

#include "heavyclip/problems.hpp"
#include "heavyclip/restarts.hpp"

using namespace heavyclip;

TEST_CASE("empty plan returns x0 untouched") {
  const QuadraticToyProblem toy(3, NoiseModel::gaussian());
  const Vector x0 = Vector::Constant(3, 0.1);
  const RestartPlan p = restart_plan_sstm(1, 1, 3, 1, 10.0, 0.05);
  REQUIRE(p.tau == 0);
  const RestartResult r = run_restarted_sstm(toy, p, x0, RngStream(0, 0));
  CHECK(r.x == x0);
  CHECK(r.runs.empty());
  CHECK(r.oracle_calls == 0);
}

TEST_CASE("deterministic halving for both restart schemes") {
  const QuadraticToyProblem toy(4, NoiseModel::none());
  const Vector x0 = Vector::LinSpaced(4, -3, 4);
  const double gap = suboptimality(toy, x0);
  const double R = restart_radius(gap, 1.0);
  const double eps = gap / 40;
  SUBCASE("SSTM") {
    const RestartPlan p = restart_plan_sstm(1, 1, 0, R, eps, 0.05);
    const RestartResult r = run_restarted_sstm(toy, p, x0, RngStream(0, 0), 100);
    REQUIRE(r.summary.size() == p.tau);
    const auto g = r.boundary_gaps();
    for (std::size_t t = 1; t < g.size(); ++t) CHECK(g[t] <= 0.5 * g[t - 1]);
    CHECK(g.back() <= std::ldexp(gap, -int(p.tau)));
    for (std::uint64_t t = 0; t < p.tau; ++t) {
      CHECK(r.summary[t].clip_parameter ==
            doctest::Approx(std::sqrt(5.0) * R / (8 * std::ldexp(1.0, int(t)) * p.log_term)).epsilon(1e-15));
    }
  }
  SUBCASE("SGD") {
    const RestartPlan p = restart_plan_sgd(1, 1, 0, R, eps, 0.05);
    const RestartResult r = run_restarted_sgd(toy, p, x0, RngStream(0, 0), 1000);
    const auto g = r.boundary_gaps();
    REQUIRE(g.size() == p.tau + 1);
    for (std::size_t t = 1; t < g.size(); ++t) CHECK(g[t] <= 0.5 * g[t - 1]);
  }
}

TEST_CASE("a single SGD restart is one averaged run") {
  const QuadraticToyProblem toy(2, NoiseModel::gaussian());
  const Vector x0 = Vector::Constant(2, 2.0);
  const double R = restart_radius(suboptimality(toy, x0), 1.0);
  // mu R^2 / (2 eps) = 2 gives tau = 1.
  const RestartPlan p = restart_plan_sgd(1, 1, 2, R, R * R / 4, 0.05);
  REQUIRE(p.tau == 1);
  const RngStream rng(3, 3);
  const RestartResult r = run_restarted_sgd(toy, p, x0, rng);
  const RunResult direct = run_sgd(toy, p.inner_sgd(0), x0, p.N0, rng.child(0), 1);
  CHECK(r.x == direct.output);
  CHECK(r.oracle_calls == direct.trajectory.oracle_calls);
  CHECK(r.oracle_calls == p.N0 * p.sgd_batches[0]);
}

TEST_CASE("oracle accounting sums over stages and streams differ per stage") {
  const QuadraticToyProblem toy(2, NoiseModel::burr());
  const Vector x0 = Vector::Constant(2, 5.0);
  const double R = restart_radius(suboptimality(toy, x0), 1.0);
  TheoremConstants k;
  k.practical_scale = 0.05;
  const RestartPlan p = restart_plan_sgd(1, 1, 2, R, R * R / 16, 0.1, k);
  const RestartResult r = run_restarted_sgd(toy, p, x0, RngStream(1, 1), 10);
  std::uint64_t total = 0;
  for (const auto& run : r.runs) total += run.oracle_calls;
  CHECK(total == r.oracle_calls);
  CHECK(r.summary.back().calls == r.oracle_calls);
  REQUIRE(r.runs.size() >= 2);
  CHECK(r.runs[0].records[1].f_gap != r.runs[1].records[1].f_gap);
}

TEST_CASE("restarts need strong convexity and matching plans") {
  SparseDataset d;
  d.add_row(1, {{0, 1.0}});
  d.add_row(-1, {{0, 0.5}});
  const auto lr = make_logreg(d);
  const RestartPlan p = restart_plan_sstm(1, 1, 0, 1, 0.01, 0.05);
  CHECK_THROWS_AS(run_restarted_sstm(lr, p, Vector::Zero(1), RngStream(0, 0)), InvalidArgument);
  const QuadraticToyProblem toy(1, NoiseModel::none());
  CHECK_THROWS_AS(run_restarted_sgd(toy, p, Vector::Zero(1), RngStream(0, 0)), InvalidArgument);
}
