#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gaplab/fit.hpp"
#include "gaplab/numerics.hpp"

using namespace gaplab;

TEST_CASE("fit_exponent recovers an exact power law", "[fit]") {
  std::vector<double> xs, ys;
  for (int i = 0; i < 6; ++i) {
    const double x = std::pow(10.0, -0.5 * i);
    xs.push_back(x);
    ys.push_back(5.0 * std::pow(x, -0.5));
  }
  auto f = fit_exponent(xs, ys);
  CHECK(f.slope == Catch::Approx(-0.5).margin(1e-12));
  CHECK(std::exp(f.intercept) == Catch::Approx(5.0).margin(1e-10));
  CHECK(f.r_squared == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("fit_exponent on two points", "[fit]") {
  auto f = fit_exponent({1.0, std::exp(1.0)}, {1.0, std::exp(2.0)});
  CHECK(f.slope == Catch::Approx(2.0).margin(1e-12));
  CHECK(f.stderr_slope == 0.0);
}

TEST_CASE("fit_exponent with seeded multiplicative noise", "[fit]") {
  std::uint64_t s = 42;
  std::vector<double> xs, ys;
  for (int i = 0; i < 12; ++i) {
    const double x = std::pow(10.0, -0.25 * i);
    xs.push_back(x);
    ys.push_back(std::pow(x, 0.414) * (1.0 + 0.01 * detail::lcg_unit(s)));
  }
  auto f = fit_exponent(xs, ys);
  CHECK(f.slope == Catch::Approx(0.414).margin(0.02));
  CHECK(f.r_squared > 0.999);
}

TEST_CASE("fit_exponent input validation", "[fit]") {
  CHECK_THROWS_AS(fit_exponent({1.0}, {1.0}), UsageError);
  CHECK_THROWS_AS(fit_exponent({1.0, 2.0}, {1.0}), UsageError);
  CHECK_THROWS_AS(fit_exponent({1.0, -2.0}, {1.0, 1.0}), UsageError);
  CHECK_THROWS_AS(fit_exponent({1.0, 2.0}, {0.0, 1.0}), UsageError);
  CHECK_THROWS_AS(fit_exponent({2.0, 2.0}, {1.0, 3.0}), UsageError);
}

TEST_CASE("middle_log_window trims both ends of the log range", "[fit]") {
  std::vector<double> xs;
  for (int i = 0; i <= 10; ++i) xs.push_back(std::pow(10.0, -i));
  auto idx = middle_log_window(xs, 0.6);
  REQUIRE(!idx.empty());
  for (int i : idx) {
    CHECK(xs[i] <= std::pow(10.0, -2.0) * (1 + 1e-12));
    CHECK(xs[i] >= std::pow(10.0, -8.0) * (1 - 1e-12));
  }
}
