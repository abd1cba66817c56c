#pragma once
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "gaplab/errors.hpp"

namespace gaplab {

/// The two-inclusion neck. The upper wall is eps + f, the lower wall g, with
/// f = theta_share * (quadratic + quartic) and g = -(1 - theta_share) * (...),
/// so f - g = x^t M x + c4 |x|^4. M is half the Hessian of f - g at the
/// closest point and must be SPD.
struct GapGeometry {
  int n = 3;                 // ambient dimension, >= 2
  double epsilon = 1e-2;     // gap distance > 0
  Eigen::MatrixXd hessian;   // (n-1) x (n-1), SPD
  double quartic_coeff = 0.0;
  double f_share = 0.5;      // fraction of f-g carried by the upper wall
  double r0 = 0.5;           // neck half-width, in (0, 1]
  double gamma = 1.0;        // Holder exponent of the C^{2,gamma} class

  double min_eig() const { return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(hessian).eigenvalues()(0); }
  double max_eig() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hessian);
    return es.eigenvalues()(hessian.rows() - 1);
  }

  void validate() const {
    if (n < 2) throw UsageError("GapGeometry: dimension must be >= 2");
    if (!(epsilon >= 0.0)) throw UsageError("GapGeometry: epsilon must be nonnegative");
    if (hessian.rows() != n - 1 || hessian.cols() != n - 1)
      throw UsageError("GapGeometry: hessian must be (n-1) x (n-1)");
    if ((hessian - hessian.transpose()).cwiseAbs().maxCoeff() > 0.0)
      throw UsageError("GapGeometry: hessian must be symmetric");
    if (!(min_eig() > 0.0)) throw UsageError("GapGeometry: hessian must be positive definite");
    if (!(r0 > 0.0 && r0 <= 1.0)) throw UsageError("GapGeometry: r0 must be in (0, 1]");
    if (!(f_share >= 0.0 && f_share <= 1.0)) throw UsageError("GapGeometry: f_share must be in [0, 1]");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw UsageError("GapGeometry: gamma must be in (0, 1]");
    // keep f - g > 0 on 0 < |x'| < 2 r0
    if (quartic_coeff < -min_eig() / (8.0 * r0 * r0))
      throw UsageError("GapGeometry: quartic coefficient violates the wall separation condition");
  }

  double quadratic(const Eigen::VectorXd& xp) const { return xp.dot(hessian * xp); }
  double profile(const Eigen::VectorXd& xp) const {
    const double r2 = xp.squaredNorm();
    return quadratic(xp) + quartic_coeff * r2 * r2;
  }
  double f(const Eigen::VectorXd& xp) const { return f_share * profile(xp); }
  double g(const Eigen::VectorXd& xp) const { return -(1.0 - f_share) * profile(xp); }
  Eigen::VectorXd grad_profile(const Eigen::VectorXd& xp) const {
    return 2.0 * (hessian * xp) + 4.0 * quartic_coeff * xp.squaredNorm() * xp;
  }
  Eigen::VectorXd grad_f(const Eigen::VectorXd& xp) const { return f_share * grad_profile(xp); }
  Eigen::VectorXd grad_g(const Eigen::VectorXd& xp) const { return -(1.0 - f_share) * grad_profile(xp); }
};

/// delta(x') = eps + f - g = eps + x^t M x + c4 |x|^4, defined for |x'| <= 2 r0.
inline double gap_width(const GapGeometry& geom, const Eigen::VectorXd& xp) {
  if (xp.size() != geom.n - 1) throw UsageError("gap_width: point dimension mismatch");
  if (xp.norm() > 2.0 * geom.r0 * (1.0 + 1e-12)) throw UsageError("gap_width: point outside 2 r0");
  return geom.epsilon + geom.profile(xp);
}

/// a(xi) = xi^t M xi sampled on the unit sphere S^{n-2}.
/// n=3: uniform periodic theta grid, theta_j = 2 pi j / N.
/// n=4: latitude-longitude grid (N x 2N) with half-cell offset from the poles,
///      phi_i = (i + 1/2) pi / N, theta_j = 2 pi j / (2N).
struct Weight {
  int n = 3;
  int n_theta = 0;              // n=3: grid size; n=4: longitude count (2N)
  int n_phi = 0;                // n=4 only: latitude count (N); 0 for n=3
  Eigen::MatrixXd m;            // source matrix
  std::vector<double> samples;  // node samples, row-major (phi outer for n=4)

  double at_angle(double theta) const {
    const double c = std::cos(theta), s = std::sin(theta);
    return m(0, 0) * c * c + 2.0 * m(0, 1) * c * s + m(1, 1) * s * s;
  }
  double at_sphere(double phi, double theta) const {
    Eigen::Vector3d xi(std::sin(phi) * std::cos(theta), std::sin(phi) * std::sin(theta), std::cos(phi));
    return xi.dot(m * xi);
  }
  int size() const { return n == 3 ? n_theta : n_phi * n_theta; }
  double theta(int j) const { return 2.0 * std::numbers::pi * j / n_theta; }
  double phi(int i) const { return (i + 0.5) * std::numbers::pi / n_phi; }
};

inline Weight build_weight(const GapGeometry& geom, int grid_size) {
  geom.validate();
  if (geom.n != 3 && geom.n != 4) throw UsageError("build_weight: only n in {3, 4} supported");
  if (grid_size < 16 || grid_size % 2 != 0) throw UsageError("build_weight: grid size must be even and >= 16");

  Weight w;
  w.n = geom.n;
  w.m = geom.hessian;
  if (geom.n == 3) {
    w.n_theta = grid_size;
    w.samples.resize(grid_size);
    for (int j = 0; j < grid_size; ++j) w.samples[j] = w.at_angle(w.theta(j));
  } else {
    w.n_phi = grid_size;
    w.n_theta = 2 * grid_size;
    w.samples.resize(w.n_phi * w.n_theta);
    for (int i = 0; i < w.n_phi; ++i)
      for (int j = 0; j < w.n_theta; ++j) w.samples[i * w.n_theta + j] = w.at_sphere(w.phi(i), w.theta(j));
  }
  return w;
}

} // namespace gaplab
