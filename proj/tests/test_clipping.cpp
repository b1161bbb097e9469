#include <doctest.h>

#include <cmath>
#include <limits>

#include "heavyclip/clipping.hpp"
#include "heavyclip/problems.hpp"

using namespace heavyclip;

TEST_CASE("clip examples") {
  Vector g(2);
  g << 3, 4;
  CHECK(clip(g, 10) == g);
  CHECK(clip(g, 5) == g);
  const Vector c = clip(g, 1);
  CHECK(c[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(c[1] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(clip(Vector::Zero(3), 1.0) == Vector::Zero(3));
  CHECK(clip(g, std::numeric_limits<double>::infinity()) == g);
  CHECK_THROWS_AS(clip(g, 0.0), InvalidArgument);
  CHECK_THROWS_AS(clip(g, -1.0), InvalidArgument);
  CHECK_THROWS_AS(clip(g, std::nan("")), InvalidArgument);
}

TEST_CASE("clip_in_place reports activation") {
  Vector g(2);
  g << 3, 4;
  CHECK_FALSE(clip_in_place(g, 5.0));
  CHECK(clip_in_place(g, 4.999));
  CHECK(g.norm() <= 4.999);
}

TEST_CASE("clip norm bound holds exactly on awkward magnitudes") {
  RngStream r(1, 1);
  for (int i = 0; i < 20000; ++i) {
    const auto n = static_cast<Eigen::Index>(1 + r.below(50));
    Vector g(n);
    const double s = std::pow(10.0, -200.0 + 400.0 * r.uniform_open());
    for (Eigen::Index j = 0; j < n; ++j) g[j] = s * r.normal();
    const double lambda = s * std::pow(10.0, -3.0 + 3.0 * r.uniform_open());
    const Vector c = clip(g, lambda);
    // Same norm the clip uses: plain in the safe range, scaled outside it.
    const double plain = c.norm();
    REQUIRE((plain > 1e-150 && plain < 1e150 ? plain : c.stableNorm()) <= lambda);
    // Direction preserved.
    const Vector u = c / c.stableNorm(), v = g / g.stableNorm();
    CHECK(u.dot(v) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("estimator statistics are zero without noise") {
  const QuadraticToyProblem toy(5, NoiseModel::none());
  const Vector x = Vector::Constant(5, 0.1);
  RngStream r(3, 3);
  const auto s = estimate_clipped_stats(toy, x, 10.0, 4, 1000, r);
  // Only the rounding of the averages remains.
  CHECK(s.bias_norm <= 1e-14);
  CHECK(s.distortion_msq <= 1e-28);
  CHECK(s.variance_msq <= 1e-28);
  CHECK(s.clip_rate == 0.0);
  CHECK(s.samples_used == 4000);
}

TEST_CASE("estimator preconditions") {
  const QuadraticToyProblem toy(5, NoiseModel::gaussian());
  const Vector x = Vector::Constant(5, 1.0);  // ||grad|| = sqrt 5
  RngStream r(3, 3);
  CHECK_THROWS_AS(estimate_clipped_stats(toy, x, 4.0, 1, 1000, r), InvalidArgument);
  CHECK_THROWS_AS(estimate_clipped_stats(toy, x, 10.0, 1, 999, r), InvalidArgument);
  CHECK_THROWS_AS(estimate_clipped_stats(toy, x, 10.0, 0, 1000, r), InvalidArgument);
}

TEST_CASE("lemma bounds on the toy problem") {
  const std::size_t n = 10;
  const double sigma2 = double(n);
  const double sigma = std::sqrt(sigma2);
  const Vector x = Vector::Constant(n, 0.2);
  SUBCASE("gaussian, m = 1, lambda = 10 sigma") {
    const QuadraticToyProblem toy(n, NoiseModel::gaussian());
    RngStream r(4, 0);
    const auto s = estimate_clipped_stats(toy, x, 10 * sigma, 1, 20000, r);
    const auto b = clipped_estimator_bounds(sigma2, 10 * sigma, 1);
    CHECK(s.bias_norm <= b.bias + 3 * s.bias_se);
    CHECK(s.magnitude_max <= b.magnitude + 1e-12);
  }
  SUBCASE("burr, m = 16") {
    const QuadraticToyProblem toy(n, NoiseModel::burr());
    RngStream r(4, 1);
    const auto s = estimate_clipped_stats(toy, x, sigma, 16, 20000, r);
    const auto b = clipped_estimator_bounds(sigma2, sigma, 16);
    CHECK(s.distortion_msq <= b.distortion + 3 * s.distortion_se);
    CHECK(s.variance_msq <= b.variance + 3 * s.variance_se);
    CHECK(s.magnitude_max <= b.magnitude + 1e-12);
    CHECK(s.clip_rate > 0.0);
  }
}

TEST_CASE("bound formulas") {
  const auto b = clipped_estimator_bounds(100.0, 5.0, 4);
  CHECK(b.magnitude == 10.0);
  CHECK(b.bias == doctest::Approx(4 * 100.0 / (4 * 5.0)));
  CHECK(b.distortion == doctest::Approx(18 * 100.0 / 4));
  CHECK(b.variance == doctest::Approx(18 * 100.0 / 4));
}
