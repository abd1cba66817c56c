#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gaplab/radial_ode.hpp"

using namespace gaplab;

namespace {

RadialFunction power_fn(const std::vector<double>& r, double p, double c = 1.0) {
  RadialFunction f;
  f.r = r;
  f.v.resize(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) f.v[i] = c * std::pow(r[i], p);
  return f;
}

} // namespace

TEST_CASE("apply_L indicial identity on powers", "[radialode]") {
  const int n = 3;
  const double lambda = 1.0;
  const double alpha = alpha_of(lambda, n);
  auto r = log_grid(1e-4, 1.0, 8000);
  for (double p : {0.3, alpha, 1.0 + alpha, 2.5}) {
    auto lu = apply_L(power_fn(r, p), lambda, n);
    const double factor = p * p + (n - 1) * p - lambda;
    const double scale = p * p + (n - 1) * p + std::abs(lambda);
    const int lo = static_cast<int>(0.1 * r.size()), hi = static_cast<int>(0.9 * r.size());
    for (int i = lo; i < hi; ++i)
      CHECK(std::abs(lu.v[i] - factor * std::pow(r[i], p)) <= 1e-6 * scale * std::pow(r[i], p));
  }
}

TEST_CASE("apply_L on constants and linearity", "[radialode]") {
  auto r = log_grid(1e-4, 1.0, 300);
  const double lambda = 2.0;
  auto lc = apply_L(power_fn(r, 0.0, 5.0), lambda, 4);
  for (double v : lc.v) CHECK(v == Catch::Approx(-lambda * 5.0).margin(1e-9));

  auto u = power_fn(r, 1.3), w = power_fn(r, 0.7);
  RadialFunction combo;
  combo.r = r;
  combo.v.resize(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) combo.v[i] = 2.0 * u.v[i] - 3.0 * w.v[i];
  auto lu = apply_L(u, lambda, 3), lw = apply_L(w, lambda, 3), lcombo = apply_L(combo, lambda, 3);
  for (std::size_t i = 0; i < r.size(); ++i)
    CHECK(lcombo.v[i] == Catch::Approx(2.0 * lu.v[i] - 3.0 * lw.v[i]).margin(1e-8));
}

TEST_CASE("apply_L grid validation", "[radialode]") {
  RadialFunction f;
  f.r = {1e-5, 2e-5};
  f.v = {0.0, 0.0};
  CHECK_THROWS_AS(apply_L(f, 1.0, 3), UsageError);
  f.r = {1e-3, 1e-2, 1e-1}; // first node above 1e-4
  f.v = {0.0, 0.0, 0.0};
  CHECK_THROWS_AS(apply_L(f, 1.0, 3), UsageError);
}

TEST_CASE("reduction_of_order on the model families", "[radialode]") {
  const int n = 3;
  const double lambda = 1.0;
  const double alpha = alpha_of(lambda, n);
  auto r = log_grid(1e-4, 1.0, 200000);

  SECTION("H = 0 gives v = 0") {
    auto v = reduction_of_order(power_fn(r, 0.0, 0.0), lambda, n);
    for (double x : v.v) CHECK(x == 0.0);
  }
  SECTION("H = r^{1+alpha} gives v = r^{1+alpha} / (n + 2 alpha)") {
    auto v = reduction_of_order(power_fn(r, 1.0 + alpha), lambda, n);
    const double want = 1.0 / (n + 2.0 * alpha);
    const int lo = static_cast<int>(0.1 * r.size()), hi = static_cast<int>(0.9 * r.size());
    for (int i = lo; i < hi; ++i)
      CHECK(v.v[i] == Catch::Approx(want * std::pow(r[i], 1.0 + alpha)).epsilon(1e-8));
  }
  SECTION("H = r^{2+alpha} gives the polynomial-identity coefficient") {
    auto v = reduction_of_order(power_fn(r, 2.0 + alpha), lambda, n);
    const double p = 2.0 + alpha;
    const double want = 1.0 / (p * p + (n - 1) * p - lambda);
    const int lo = static_cast<int>(0.1 * r.size()), hi = static_cast<int>(0.9 * r.size());
    for (int i = lo; i < hi; ++i)
      CHECK(v.v[i] == Catch::Approx(want * std::pow(r[i], p)).epsilon(1e-7));
  }
}

TEST_CASE("reduction_of_order round trip through apply_L", "[radialode]") {
  const int n = 3;
  const double lambda = 1.0;
  const double alpha = alpha_of(lambda, n);
  auto r = log_grid(1e-4, 1.0, 4000);
  for (double p : {1.0 + alpha, 2.0 + alpha}) {
    auto h = power_fn(r, p);
    auto v = reduction_of_order(h, lambda, n);
    auto lv = apply_L(v, lambda, n);
    const int lo = static_cast<int>(0.15 * r.size()), hi = static_cast<int>(0.85 * r.size());
    for (int i = lo; i < hi; ++i) CHECK(lv.v[i] == Catch::Approx(h.v[i]).epsilon(1e-4));
  }
}

TEST_CASE("reduction_of_order growth bounds w and v", "[radialode]") {
  const int n = 3;
  const double lambda = 1.0;
  const double alpha = alpha_of(lambda, n);
  auto r = log_grid(1e-4, 1.0, 2000);
  auto h = power_fn(r, 1.0 + alpha, 0.7);
  auto v = reduction_of_order(h, lambda, n);

  // |v| <= C r^{1+alpha}: fitted slope of |v|
  std::vector<double> rs, vs, ws;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (std::abs(v.v[i]) > 1e-300) {
      rs.push_back(r[i]);
      vs.push_back(std::abs(v.v[i]));
      ws.push_back(std::abs(v.v[i]) / std::pow(r[i], alpha)); // w = v / r^alpha
    }
  }
  CHECK(fit_exponent(rs, vs).slope >= 1.0 + alpha - 0.05);
  // |w| <= C r with w(0) = 0; here C = 0.7 / (n + 2 alpha) < 1
  CHECK(fit_exponent(rs, ws).slope >= 0.95);
  CHECK(std::abs(v.v[0] / std::pow(r[0], alpha)) <= r[0]);
}

TEST_CASE("reduction_of_order attaches a quadrature error estimate", "[radialode]") {
  const int n = 3;
  const double lambda = 1.0;
  const double alpha = alpha_of(lambda, n);
  auto r = log_grid(1e-4, 1.0, 500);
  double err = -1.0;
  auto v = reduction_of_order(power_fn(r, 1.0 + alpha), lambda, n, &err);
  CHECK(err >= 0.0);
  // the estimate bounds the true coarse-grid error within a small factor
  const double exact_tail = std::pow(1.0, 1.0 + alpha) / (n + 2.0 * alpha);
  CHECK(err <= 0.05 * exact_tail);
  CHECK(std::abs(v.v.back() - exact_tail) <= 10.0 * err + 1e-12);
}

TEST_CASE("reduction_of_order rejects too-singular H", "[radialode]") {
  const int n = 3;
  const double lambda = 1.0;
  const double alpha = alpha_of(lambda, n);
  auto r = log_grid(1e-4, 1.0, 500);
  CHECK_THROWS_AS(reduction_of_order(power_fn(r, alpha - 0.5), lambda, n), InapplicableError);
}

TEST_CASE("extract_leading on synthetic profiles", "[radialode]") {
  const double alpha = std::sqrt(2.0) - 1.0;
  auto r = log_grid(1e-4, 1.0, 1200);

  SECTION("pure power") {
    auto fit = extract_leading(power_fn(r, alpha, 3.0), alpha);
    CHECK(fit.c1 == Catch::Approx(3.0).margin(1e-10));
    double rem = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i)
      if (r[i] <= 0.1) rem = std::max(rem, std::abs(3.0 * std::pow(r[i], alpha) - fit.c1 * std::pow(r[i], alpha)));
    CHECK(rem <= 1e-12);
    CHECK(fit.residual <= 1e-12);
  }
  SECTION("power plus next-order remainder") {
    RadialFunction u;
    u.r = r;
    u.v.resize(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) u.v[i] = 3.0 * std::pow(r[i], alpha) + std::pow(r[i], 1.0 + alpha);
    auto fit = extract_leading(u, alpha);
    CHECK(fit.c1 == Catch::Approx(3.0).margin(1e-3));
    CHECK(fit.remainder_slope == Catch::Approx(1.0 + alpha).margin(0.05));
  }
  SECTION("window too short") {
    auto fit_ok = extract_leading(power_fn(r, alpha), alpha); // sanity
    CHECK(fit_ok.window_points >= 5);
    auto coarse = log_grid(1e-4, 1.0, 40); // only 3 nodes below 2e-4
    CHECK_THROWS_AS(extract_leading(power_fn(coarse, alpha), alpha, 2e-4), UsageError);
  }
}
