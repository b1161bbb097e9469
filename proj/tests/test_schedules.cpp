#include <doctest.h>

#include <cmath>

#include "heavyclip/schedules.hpp"

using namespace heavyclip;

TEST_CASE("alpha and A closed forms") {
  const AlphaPair p0 = sstm_alpha(0, 1, 1);
  CHECK(p0.alpha == 1.0);
  CHECK(p0.A == 1.0);
  const AlphaPair p1 = sstm_alpha(1, 1, 1);
  CHECK(p1.alpha == 1.5);
  CHECK(p1.A == 2.5);
  CHECK(p0.A + p1.alpha == p1.A);
  // A_{k+1} >= a L alpha_{k+1}^2, equality at k = 0.
  for (double a : {1.0, 10.0, 4.78e4}) {
    for (double L : {1.0, 0.25}) {
      const AlphaPair q = sstm_alpha(0, a, L);
      CHECK(q.A == doctest::Approx(a * L * q.alpha * q.alpha).epsilon(1e-15));
      for (std::uint64_t k : {1u, 10u, 1000u, 999999u}) {
        const AlphaPair p = sstm_alpha(k, a, L);
        CHECK(p.A >= a * L * p.alpha * p.alpha);
        CHECK(p.A == doctest::Approx((k + 1.0) * (k + 4.0) / (4 * a * L)).epsilon(1e-15));
      }
    }
  }
}

TEST_CASE("confidence log") {
  CHECK(confidence_log(100, 0.05) == doctest::Approx(std::log(8000.0)).epsilon(1e-15));
  CHECK_THROWS_AS(confidence_log(1, 0.9), InvalidArgument);  // ln(4.44) < 2
  CHECK_THROWS_AS(confidence_log(100, 0.0), InvalidArgument);
  CHECK_THROWS_AS(confidence_log(100, 1.0), InvalidArgument);
}

TEST_CASE("convex clipped-SSTM theorem parameters") {
  const SstmSchedule s = sstm_theorem_params(1, 0, 1, 100, 0.05);
  CHECK(s.log_term == doctest::Approx(8.987).epsilon(1e-4));
  CHECK(s.B == doctest::Approx(0.0311).epsilon(1e-3));
  CHECK(s.B == doctest::Approx(std::sqrt(5.0) / (8 * std::log(8000.0))).epsilon(1e-15));
  CHECK(s.a == doctest::Approx(4.78e4).epsilon(2e-3));
  const double l = std::log(8000.0);
  const double branch = 36 * std::pow(2 * l + std::sqrt(4 * l * l + 2 * l), 2);
  CHECK(s.a == doctest::Approx(branch).epsilon(1e-15));
  REQUIRE(s.batches.size() == 100);
  for (auto m : s.batches) CHECK(m == 1);
  for (std::uint64_t k = 0; k < 100; ++k) CHECK(s.clip_level(k) * s.alpha(k) == doctest::Approx(s.B).epsilon(1e-15));

  const SstmSchedule noisy = sstm_theorem_params(1, 4, 1, 100, 0.05);
  for (std::size_t k = 1; k < noisy.batches.size(); ++k) CHECK(noisy.batches[k] >= noisy.batches[k - 1]);
  // Direct evaluation of the larger branch at the last step.
  const double alpha = noisy.alpha(99);
  const double raw = std::max({1.0, 6000 * 4 * alpha * alpha * 100 * l / 5, 10368 * 4 * alpha * alpha * 100 / 5});
  CHECK(noisy.batches[99] == static_cast<std::uint64_t>(std::ceil(raw)));
  CHECK_THROWS_AS(sstm_theorem_params(1, 0, 0, 100, 0.05), InvalidArgument);
}

TEST_CASE("theorem parameters are pure functions") {
  const SstmSchedule a = sstm_theorem_params(0.7, 3, 2, 500, 0.1);
  const SstmSchedule b = sstm_theorem_params(0.7, 3, 2, 500, 0.1);
  CHECK(a.batches == b.batches);
  CHECK(a.a == b.a);
  CHECK(a.B == b.B);
}

TEST_CASE("batch policies") {
  SUBCASE("medium batch without noise uses unit batches") {
    const SstmSchedule s = sstm_batch_policy(BatchPolicy::MediumBatch, 1, 0, 1, 10000, 0.05);
    for (auto m : s.batches) CHECK(m == 1);
  }
  SUBCASE("medium batch that does not dominate falls back with a warning") {
    const SstmSchedule s = sstm_batch_policy(BatchPolicy::MediumBatch, 1, 1, 1, 1000, 0.05);
    CHECK(s.policy == BatchPolicy::TheoremExact);
    CHECK(s.warnings.size() == 1);
    CHECK(s.batches.back() == 603);
  }
  SUBCASE("medium batch that dominates keeps a = N l") {
    const SstmSchedule s = sstm_batch_policy(BatchPolicy::MediumBatch, 1, 1, 1, 100000, 0.05);
    CHECK(s.policy == BatchPolicy::MediumBatch);
    CHECK(s.a == doctest::Approx(100000 * std::log(4e5 / 0.05)).epsilon(1e-15));
    const double alpha = s.alpha(99999);
    const double raw = 6000 * alpha * alpha * 1e5 * s.log_term / 5;
    CHECK(s.batches.back() == static_cast<std::uint64_t>(std::ceil(raw)));
  }
  SUBCASE("constant batch keeps the batchsize bounded in k") {
    const SstmSchedule s = sstm_batch_policy(BatchPolicy::ConstantBatch, 1, 100, 1, 1000, 0.05);
    CHECK(s.policy == BatchPolicy::ConstantBatch);
    // The formula evaluates to 301 at the last step, so the bound is O(1) but not 64.
    CHECK(s.batches.back() == 301);
    CHECK(*std::max_element(s.batches.begin(), s.batches.end()) == 301);
    const SstmSchedule big = sstm_batch_policy(BatchPolicy::ConstantBatch, 1, 100, 1, 4000, 0.05);
    CHECK(double(big.batches.back()) <= 1.1 * double(s.batches.back()));
  }
  SUBCASE("combined keeps the theorem minimum") {
    const SstmSchedule s = sstm_batch_policy(BatchPolicy::Combined, 1, 0, 1, 100, 0.05);
    CHECK(s.a == doctest::Approx(sstm_theorem_params(1, 0, 1, 100, 0.05).a));
  }
  CHECK(batch_policy_from_string("constant") == BatchPolicy::ConstantBatch);
  CHECK_THROWS_AS(batch_policy_from_string("huge"), InvalidArgument);
}

TEST_CASE("convex clipped-SGD theorem parameters") {
  const SgdSchedule s = sgd_theorem_params(1, 0, 1, 100, 0.05);
  CHECK(s.lambda == doctest::Approx(2 * std::sqrt(2.0)).epsilon(1e-15));
  CHECK(s.gamma == doctest::Approx(1.391e-3).epsilon(1e-3));
  CHECK(s.batch_size == 1);
  const SgdSchedule n = sgd_theorem_params(1, 1, 1, 100, 0.05);
  CHECK(n.batch_size == 76);
}

TEST_CASE("strongly convex clipped-SGD parameters") {
  const SgdSchedule s = sgd_strongly_convex_params(1, 1, 0, 2.5, 1000, 0.05);
  CHECK(s.lambda_at(0) == doctest::Approx(4 * std::sqrt(2.5)).epsilon(1e-15));
  CHECK(s.gamma == doctest::Approx(1 / (81 * std::log(4000 / 0.05))).epsilon(1e-15));
  for (std::uint64_t l = 0; l < 999; ++l) {
    CHECK(s.lambda_at(l + 1) < s.lambda_at(l));
    CHECK(s.lambda_at(l + 1) / s.lambda_at(l) == doctest::Approx(std::sqrt(1 - s.gamma)).epsilon(1e-12));
    CHECK(s.batch_at(l) == 1);
  }
  const SgdSchedule n = sgd_strongly_convex_params(2, 0.5, 3, 2.5, 1000, 0.05);
  for (std::uint64_t k = 1; k < 1000; ++k) CHECK(n.batch_at(k) >= n.batch_at(k - 1));
  CHECK(n.batch_at(999) > n.batch_at(0));
}

TEST_CASE("decaying clip level") {
  double lambda = 100;
  for (std::uint64_t it = 0; it <= 30; ++it) lambda = d_clipped_update(lambda, it, 10, 0.9);
  CHECK(lambda == doctest::Approx(72.9).epsilon(1e-14));
  CHECK(d_clipped_update(5, 0, 10, 0.5) == 5);
  CHECK(d_clipped_period(270, 1000, 20) == 13500);
  CHECK(d_clipped_period(270, 1, 20) == 14);
  const SgdSchedule s = sgd_decaying(0.1, 2.72, 20, 13500, 0.9);
  CHECK(s.lambda_at(13499) == doctest::Approx(2.72));
  CHECK(s.lambda_at(13500) == doctest::Approx(2.72 * 0.9));
}

TEST_CASE("restart counts") {
  CHECK(restart_count(1, 1, 0.01) == 6);
  CHECK(restart_count(1, 4, 1) == 3);  // mu R^2 / (2 eps) = 8
  CHECK(restart_count(1, 1, 0.5) == 0);
  CHECK(restart_radius(2, 1) == 2);
}

TEST_CASE("R-clipped-SSTM plan") {
  const RestartPlan p = restart_plan_sstm(1, 1, 0, 1, 0.01, 0.05);
  CHECK(p.tau == 6);
  CHECK(p.N0 == 2119);
  CHECK(p.log_term == doctest::Approx(std::log(4.0 * 2119 * 6 / 0.05)).epsilon(1e-15));
  // Fixed point: N0 = ceil(C sqrt(8 a L / mu)) with a evaluated at the final log.
  CHECK(p.N0 == static_cast<std::uint64_t>(std::ceil(std::sqrt(5.0) * std::sqrt(8 * sstm_min_a(p.log_term)))));
  for (std::uint64_t t = 0; t + 1 < p.tau; ++t) {
    CHECK(p.clip_parameter[t + 1] / p.clip_parameter[t] == 0.5);
    CHECK(p.clip_parameter[t] * std::ldexp(1.0, int(t)) == doctest::Approx(p.clip_parameter[0]).epsilon(1e-15));
  }
  const RestartPlan n = restart_plan_sstm(1, 1, 50, 1, 0.01, 0.05);
  for (std::uint64_t t = 0; t + 1 < n.tau; ++t) {
    CHECK(n.sstm_batch_raw_at(t + 1, n.N0 - 1) / n.sstm_batch_raw_at(t, n.N0 - 1) == doctest::Approx(2.0));
  }
  CHECK(n.max_batch() == n.sstm_batch(n.tau - 1, n.N0 - 1));
  const RestartPlan none = restart_plan_sstm(1, 1, 1, 1, 1.0, 0.05);
  CHECK(none.tau == 0);
  CHECK_FALSE(none.warnings.empty());
}

TEST_CASE("R-clipped-SGD plan") {
  const RestartPlan p = restart_plan_sgd(1, 0.1, 0, 1, 0.01, 0.05);
  // N0 >= 6400 ln(4 N0 tau / beta), smallest such integer from the fixed point.
  CHECK(double(p.N0) >= 6400 * p.log_term);
  CHECK(p.N0 == static_cast<std::uint64_t>(std::ceil(6400 * p.log_term)));
  CHECK(p.N0 == 109330);
  for (auto m : p.sgd_batches) CHECK(m == 1);
  CHECK(p.gamma == doctest::Approx(1 / (80 * p.log_term)).epsilon(1e-15));
  for (std::uint64_t t = 0; t < p.tau; ++t) {
    CHECK(p.clip_parameter[t] == doctest::Approx(2 * std::sqrt(2.0) * std::pow(2.0, -0.5 * t)).epsilon(1e-15));
  }
  const RestartPlan n = restart_plan_sgd(1, 1, 100, 1, 0.01, 0.05);
  for (std::uint64_t t = 0; t + 1 < n.tau; ++t) {
    CHECK(n.sgd_batch_raw_at(t + 1) / n.sgd_batch_raw_at(t) == doctest::Approx(2.0).epsilon(1e-15));
  }
}

TEST_CASE("constant-batch restart rule") {
  const RestartPlan p = small_batch_restart_params(1, 0.1, 1, 0.01, 0.05, 1);
  CHECK(p.tau == 3);
  CHECK(p.N0 == 98622);
  // The batchsize does not grow as eps shrinks, though its level is far above single digits.
  const RestartPlan q = small_batch_restart_params(1, 0.1, 1, 0.001, 0.05, 1);
  CHECK(q.N0 > p.N0);
  CHECK(double(q.max_batch()) <= 2.0 * double(p.max_batch()));
  CHECK(p.max_batch() == 33059);
  // Both theorem conditions hold at the fixed point.
  CHECK(double(p.N0) >= std::sqrt(5.0) * std::sqrt(8 * p.a * 1 / 0.1));
  CHECK(p.a >= sstm_min_a(p.log_term));

  const RestartPlan z = small_batch_restart_params(1, 0.1, 0, 0.01, 0.05, 1);
  CHECK_FALSE(z.warnings.empty());
  CHECK(z.max_batch() == 1);
}

TEST_CASE("practical scale divides the numeric constants") {
  TheoremConstants k;
  k.practical_scale = 0.01;
  const SgdSchedule a = sgd_theorem_params(1, 1, 1, 100, 0.05);
  const SgdSchedule b = sgd_theorem_params(1, 1, 1, 100, 0.05, k);
  CHECK(b.gamma == doctest::Approx(100 * a.gamma));
  CHECK(b.batch_size < a.batch_size);
  CHECK(b.lambda == a.lambda);
}
