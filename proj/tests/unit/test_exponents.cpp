#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gaplab/exponents.hpp"

using namespace gaplab;

TEST_CASE("alpha_of known values", "[exponents]") {
  CHECK(alpha_of(0.0, 3) == Catch::Approx(0.0).margin(1e-15));
  CHECK(alpha_of(1.0, 3) == Catch::Approx(std::sqrt(2.0) - 1.0).margin(1e-12));
  const double a42 = alpha_of(2.0, 4);
  CHECK(a42 == Catch::Approx((-3.0 + std::sqrt(17.0)) / 2.0).margin(1e-12));
  CHECK(a42 * a42 + 3.0 * a42 - 2.0 == Catch::Approx(0.0).margin(1e-12));
  CHECK_THROWS_AS(alpha_of(-0.1, 3), UsageError);
  CHECK_THROWS_AS(alpha_of(1.0, 2), UsageError);
}

TEST_CASE("alpha_of quadratic residual and round trip", "[exponents]") {
  for (int n : {3, 4, 5, 7}) {
    for (int i = 0; i <= 100; ++i) {
      const double lambda = 0.05 * i;
      const double a = alpha_of(lambda, n);
      CHECK(std::abs(a * a + (n - 1) * a - lambda) <= 1e-12 * std::max(1.0, lambda));
      CHECK(a * a + (n - 1) * a == Catch::Approx(lambda).margin(1e-12));
    }
  }
}

TEST_CASE("alpha_of is strictly increasing in lambda", "[exponents]") {
  for (int n : {3, 4}) {
    double prev = alpha_of(0.0, n);
    for (int i = 1; i <= 100; ++i) {
      const double cur = alpha_of(0.04 * i, n);
      CHECK(cur > prev);
      prev = cur;
    }
  }
}

TEST_CASE("alpha_of range on (0, n-2]", "[exponents]") {
  for (int n : {3, 4, 5}) {
    for (int i = 1; i <= 40; ++i) {
      const double lambda = (n - 2) * i / 40.0;
      const double a = alpha_of(lambda, n);
      CHECK(a > 0.0);
      CHECK(a <= 1.0 + 1e-15);
      if (lambda < n - 2) CHECK(a < 1.0);
    }
  }
}

TEST_CASE("ball_beta formula and identities", "[exponents]") {
  CHECK(ball_beta(3) == Catch::Approx((std::sqrt(2.0) - 1.0) / 2.0).margin(1e-14));
  CHECK(ball_beta(4) == Catch::Approx((-3.0 + std::sqrt(17.0)) / 4.0).margin(1e-14));
  for (int n = 3; n <= 10; ++n) {
    CHECK(std::abs(ball_beta(n) - 0.5 * alpha_of(n - 2.0, n)) <= 1e-14);
    // intro rate eps^{-1/2 + beta} equals the Theorem rate eps^{(alpha-1)/2}
    CHECK(std::abs((-0.5 + ball_beta(n)) - 0.5 * (alpha_of(n - 2.0, n) - 1.0)) <= 1e-14);
  }
  CHECK_THROWS_AS(ball_beta(2), UsageError);
}

TEST_CASE("exponent report propagates the error bar through alpha", "[exponents]") {
  auto rep = make_exponent_report(1.0, 1e-3, 3);
  CHECK(rep.alpha == Catch::Approx(std::sqrt(2.0) - 1.0).margin(1e-12));
  CHECK(rep.gradient_exponent == Catch::Approx(0.5 * (std::sqrt(2.0) - 2.0)).margin(1e-12));
  CHECK(rep.alpha_lo == Catch::Approx(alpha_of(1.0 - 1e-3, 3)).margin(1e-15));
  CHECK(rep.alpha_hi == Catch::Approx(alpha_of(1.0 + 1e-3, 3)).margin(1e-15));
  CHECK(rep.alpha_lo < rep.alpha);
  CHECK(rep.alpha < rep.alpha_hi);
  CHECK(rep.ball_beta_ref == Catch::Approx(ball_beta(3)).margin(1e-15));
  CHECK(rep.gradient_exponent > -0.5);
  CHECK(rep.gradient_exponent < 0.0);

  // lambda -> 0+ recovers the universal -1/2
  auto tiny = make_exponent_report(1e-12, 0.0, 3);
  CHECK(tiny.gradient_exponent == Catch::Approx(-0.5).margin(1e-12));

  CHECK_THROWS_AS(make_exponent_report(0.0, 0.0, 3), UsageError);
}
