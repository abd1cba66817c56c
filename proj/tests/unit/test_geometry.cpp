#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "gaplab/geometry.hpp"

using namespace gaplab;

namespace {

GapGeometry make_geom(int n, const Eigen::MatrixXd& m, double eps = 1e-2, double c4 = 0.0) {
  GapGeometry g;
  g.n = n;
  g.hessian = m;
  g.epsilon = eps;
  g.quartic_coeff = c4;
  return g;
}

} // namespace

TEST_CASE("build_weight identity form is constant one", "[geometry]") {
  auto g = make_geom(3, Eigen::Matrix2d::Identity());
  auto w = build_weight(g, 64);
  for (double v : w.samples) CHECK(v == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("build_weight evaluates the quadratic form directly", "[geometry]") {
  Eigen::Matrix2d m;
  m << 1, 0, 0, 4;
  auto w = build_weight(make_geom(3, m), 64);
  CHECK(w.at_angle(0.0) == Catch::Approx(1.0));
  CHECK(w.at_angle(std::numbers::pi / 2) == Catch::Approx(4.0));
  CHECK(w.at_angle(std::numbers::pi / 4) == Catch::Approx(2.5));

  Eigen::Matrix2d m2;
  m2 << 2, 1, 1, 2;
  auto w2 = build_weight(make_geom(3, m2), 64);
  CHECK(w2.at_angle(std::numbers::pi / 4) == Catch::Approx(3.0)); // max eigenvalue direction
}

TEST_CASE("weight samples stay within the eigenvalue range and are even", "[geometry]") {
  Eigen::Matrix2d m;
  m << 2.0, 0.7, 0.7, 1.1;
  auto g = make_geom(3, m);
  auto w = build_weight(g, 128);
  const double lo = g.min_eig(), hi = g.max_eig();
  for (int j = 0; j < w.n_theta; ++j) {
    CHECK(w.samples[j] >= lo - 1e-13);
    CHECK(w.samples[j] <= hi + 1e-13);
    CHECK(w.samples[j] == Catch::Approx(w.samples[(j + w.n_theta / 2) % w.n_theta]).margin(1e-13));
  }

  Eigen::Matrix3d m3;
  m3 << 2, 0.3, 0, 0.3, 1, 0.1, 0, 0.1, 1.5;
  auto g4 = make_geom(4, m3);
  auto w4 = build_weight(g4, 16);
  const double lo3 = g4.min_eig(), hi3 = g4.max_eig();
  for (int i = 0; i < w4.n_phi; ++i)
    for (int j = 0; j < w4.n_theta; ++j) {
      const double v = w4.samples[i * w4.n_theta + j];
      CHECK(v >= lo3 - 1e-13);
      CHECK(v <= hi3 + 1e-13);
      // antipode (pi - phi, theta + pi) is on the offset grid
      const int ia = w4.n_phi - 1 - i;
      const int ja = (j + w4.n_theta / 2) % w4.n_theta;
      CHECK(v == Catch::Approx(w4.samples[ia * w4.n_theta + ja]).margin(1e-13));
    }
}

TEST_CASE("build_weight rotation equivariance (n=3)", "[geometry]") {
  Eigen::Matrix2d m;
  m << 3.0, 0.4, 0.4, 1.0;
  const double phi = 2.0 * std::numbers::pi * 5.0 / 64.0; // grid-aligned rotation angle
  Eigen::Matrix2d rot;
  rot << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
  Eigen::Matrix2d mr = rot.transpose() * m * rot;
  auto w = build_weight(make_geom(3, m), 64);
  auto wr = build_weight(make_geom(3, 0.5 * (mr + mr.transpose())), 64);
  // a_{R^t M R}(theta) = a_M(theta + phi): compare by resampling
  for (int j = 0; j < 64; ++j) CHECK(wr.samples[j] == Catch::Approx(w.samples[(j + 5) % 64]).margin(1e-12));
}

TEST_CASE("build_weight scaling is exact samplewise", "[geometry]") {
  Eigen::Matrix2d m;
  m << 1.3, 0.2, 0.2, 2.2;
  auto w = build_weight(make_geom(3, m), 32);
  auto wc = build_weight(make_geom(3, Eigen::Matrix2d(4.0 * m)), 32);
  for (int j = 0; j < 32; ++j) CHECK(wc.samples[j] == 4.0 * w.samples[j]);
}

TEST_CASE("build_weight rejects bad input", "[geometry]") {
  Eigen::Matrix2d bad;
  bad << 1, 2, 2, 1; // indefinite
  CHECK_THROWS_AS(build_weight(make_geom(3, bad), 64), UsageError);
  CHECK_THROWS_AS(build_weight(make_geom(5, Eigen::Matrix4d::Identity()), 64), UsageError);
  CHECK_THROWS_AS(build_weight(make_geom(3, Eigen::Matrix2d::Identity()), 15), UsageError);
  CHECK_THROWS_AS(build_weight(make_geom(3, Eigen::Matrix2d::Identity()), 8), UsageError);
}

TEST_CASE("gap_width evaluates the wall separation", "[geometry]") {
  Eigen::Matrix2d m;
  m << 1, 0, 0, 4;
  auto g = make_geom(3, m, 1e-3, 0.1);
  g.validate();

  CHECK(gap_width(g, Eigen::Vector2d::Zero()) == Catch::Approx(1e-3));
  auto gi = make_geom(3, Eigen::Matrix2d::Identity(), 1e-3);
  CHECK(gap_width(gi, Eigen::Vector2d(0.3, 0.0)) == Catch::Approx(1e-3 + 0.09));
  CHECK(gap_width(g, Eigen::Vector2d(0.1, 0.0)) == Catch::Approx(1e-3 + 0.01 + 0.1 * 1e-4));
  CHECK_THROWS_AS(gap_width(g, Eigen::Vector2d(1.5, 0.0)), UsageError);

  // delta >= eps on the admissible disk, including a negative quartic
  auto gq = make_geom(3, m, 1e-4, -0.2);
  gq.validate();
  for (int i = 0; i < 50; ++i) {
    const double r = 2.0 * gq.r0 * i / 49.0;
    const double th = 0.37 * i;
    Eigen::Vector2d x(r * std::cos(th), r * std::sin(th));
    CHECK(gap_width(gq, x) >= gq.epsilon - 1e-15);
  }
}

TEST_CASE("gap_width minus eps vanishes quadratically at the origin", "[geometry]") {
  Eigen::Matrix2d m;
  m << 2, 0.5, 0.5, 1;
  auto g = make_geom(3, m, 1e-2, 0.3);
  g.validate();
  Eigen::Vector2d x(0.6, -0.8);
  // slope of log2 d(t)/d(t/2) at small t, Richardson-style
  const double t = 1e-3;
  const double d1 = gap_width(g, t * x) - g.epsilon;
  const double d2 = gap_width(g, 0.5 * t * x) - g.epsilon;
  const double slope = std::log2(d1 / d2);
  CHECK(slope == Catch::Approx(2.0).margin(1e-6));
}

TEST_CASE("geometry validation enforces the quartic bound", "[geometry]") {
  Eigen::Matrix2d m = Eigen::Matrix2d::Identity();
  auto g = make_geom(3, m, 1e-2, -1.0); // min_eig / (8 r0^2) = 1/2 at r0 = 1/2
  CHECK_THROWS_AS(g.validate(), UsageError);
  g.quartic_coeff = -0.4;
  CHECK_NOTHROW(g.validate());
}
