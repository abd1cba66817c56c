#pragma once
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "gaplab/errors.hpp"
#include "gaplab/exponents.hpp"
#include "gaplab/fit.hpp"

namespace gaplab {

/// A function sampled on an ascending radial grid in (0, 1],
/// resolving the origin down to r <= 1e-4.
struct RadialFunction {
  std::vector<double> r;
  std::vector<double> v;

  void validate() const {
    if (r.size() != v.size()) throw UsageError("RadialFunction: size mismatch");
    if (r.size() < 3) throw UsageError("RadialFunction: need at least 3 nodes");
    if (!(r.front() > 0.0) || r.front() > 1e-4 + 1e-18)
      throw UsageError("RadialFunction: first node must lie in (0, 1e-4]");
    if (r.back() > 1.0 + 1e-12) throw UsageError("RadialFunction: grid must stay in (0, 1]");
    for (std::size_t i = 1; i < r.size(); ++i)
      if (!(r[i] > r[i - 1])) throw UsageError("RadialFunction: grid must be strictly increasing");
    for (double x : v)
      if (!std::isfinite(x)) throw UsageError("RadialFunction: values must be finite");
  }
};

/// Geometric grid from r_min to r_max with n nodes.
inline std::vector<double> log_grid(double r_min, double r_max, int n) {
  if (!(r_min > 0.0) || !(r_max > r_min) || n < 2) throw UsageError("log_grid: bad parameters");
  std::vector<double> r(n);
  const double q = std::log(r_max / r_min) / (n - 1);
  for (int i = 0; i < n; ++i) r[i] = r_min * std::exp(q * i);
  r.back() = r_max;
  return r;
}

/// L U = r^2 U'' + n r U' - lambda U with second-order central differences on
/// the (possibly nonuniform) grid; one-sided stencils at the endpoints.
inline RadialFunction apply_L(const RadialFunction& u, double lambda, int n) {
  u.validate();
  const int m = static_cast<int>(u.r.size());
  RadialFunction out;
  out.r = u.r;
  out.v.resize(m);
  auto d1d2 = [&](int i, double& d1, double& d2) {
    if (i == 0 || i == m - 1) {
      const int a = (i == 0) ? 0 : m - 3;
      const double h1 = u.r[a + 1] - u.r[a], h2 = u.r[a + 2] - u.r[a + 1];
      if (i == 0) {
        d1 = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * u.v[a] + (h1 + h2) / (h1 * h2) * u.v[a + 1] -
             h1 / (h2 * (h1 + h2)) * u.v[a + 2];
      } else {
        d1 = h2 / (h1 * (h1 + h2)) * u.v[a] - (h1 + h2) / (h1 * h2) * u.v[a + 1] +
             (h1 + 2.0 * h2) / (h2 * (h1 + h2)) * u.v[a + 2];
      }
      d2 = 2.0 * (u.v[a] / (h1 * (h1 + h2)) - u.v[a + 1] / (h1 * h2) + u.v[a + 2] / (h2 * (h1 + h2)));
    } else {
      const double hm = u.r[i] - u.r[i - 1], hp = u.r[i + 1] - u.r[i];
      d1 = -hp / (hm * (hm + hp)) * u.v[i - 1] + (hp - hm) / (hm * hp) * u.v[i] +
           hm / (hp * (hm + hp)) * u.v[i + 1];
      d2 = 2.0 * (u.v[i - 1] / (hm * (hm + hp)) - u.v[i] / (hm * hp) + u.v[i + 1] / (hp * (hm + hp)));
    }
  };
  for (int i = 0; i < m; ++i) {
    double d1, d2;
    d1d2(i, d1, d2);
    out.v[i] = u.r[i] * u.r[i] * d2 + n * u.r[i] * d1 - lambda * u.v[i];
  }
  return out;
}

namespace detail {

// integral over [ra, rb] of s^mu * (value following a local power law between
// the endpoint samples fa, fb); falls back to trapezoid when the power-law
// interpolation is ill-posed (sign change or zeros)
inline double powerlaw_cell_integral(double ra, double rb, double fa, double fb, double mu) {
  if (fa != 0.0 && fb != 0.0 && ((fa > 0.0) == (fb > 0.0))) {
    const double p = std::log(fb / fa) / std::log(rb / ra);
    const double m = mu + p;
    if (std::abs(m + 1.0) > 1e-9)
      return fa * std::pow(ra, -p) * (std::pow(rb, m + 1.0) - std::pow(ra, m + 1.0)) / (m + 1.0);
    return fa * std::pow(ra, -p) * std::log(rb / ra);
  }
  return 0.5 * (std::pow(ra, mu) * fa + std::pow(rb, mu) * fb) * (rb - ra);
}

inline std::vector<double> reduction_core(const std::vector<double>& r, const std::vector<double>& h, double alpha,
                                          int n, double beta0) {
  const int m = static_cast<int>(r.size());
  // inner integral I(s) = int_0^s tau^{n-2+alpha} H(tau) dtau, trapezoid on
  // the grid with a power-law start cell on (0, r_0]
  std::vector<double> big_i(m);
  big_i[0] = (h[0] == 0.0) ? 0.0 : h[0] * std::pow(r[0], n - 1.0 + alpha) / (n - 1.0 + alpha + beta0);
  for (int i = 1; i < m; ++i) {
    const double ga = std::pow(r[i - 1], n - 2.0 + alpha) * h[i - 1];
    const double gb = std::pow(r[i], n - 2.0 + alpha) * h[i];
    big_i[i] = big_i[i - 1] + 0.5 * (ga + gb) * (r[i] - r[i - 1]);
  }
  // outer integral w(r) = int_0^r s^{-(n+2 alpha)} I(s) ds; the singular
  // prefactor is integrated analytically per cell against a local power law
  const double mu = -(n + 2.0 * alpha);
  std::vector<double> w(m);
  {
    const double p0 = n - 1.0 + alpha + beta0; // local power of I at 0
    w[0] = (big_i[0] == 0.0) ? 0.0 : big_i[0] * std::pow(r[0], mu + 1.0) / (p0 + mu + 1.0);
  }
  for (int i = 1; i < m; ++i)
    w[i] = w[i - 1] + powerlaw_cell_integral(r[i - 1], r[i], big_i[i - 1], big_i[i], mu);
  std::vector<double> v(m);
  for (int i = 0; i < m; ++i) v[i] = std::pow(r[i], alpha) * w[i];
  return v;
}

} // namespace detail

/// Particular bounded solution of L v = H by reduction of order:
/// v = r^alpha * int_0^r s^{-(n+2 alpha)} int_0^s tau^{n-2+alpha} H dtau ds.
/// Requires H to vanish fast enough at 0 (local power above alpha); detected
/// from the first samples. An optional quadrature error estimate is produced
/// by re-running with each cell subdivided once.
inline RadialFunction reduction_of_order(const RadialFunction& h, double lambda, int n,
                                         double* error_estimate = nullptr) {
  h.validate();
  const double alpha = alpha_of(lambda, n);
  const int m = static_cast<int>(h.r.size());

  double beta0 = 1.0 + alpha; // model-family default when the samples give no slope
  if (h.v[0] != 0.0 && h.v[1] != 0.0 && ((h.v[0] > 0.0) == (h.v[1] > 0.0)))
    beta0 = std::log(h.v[1] / h.v[0]) / std::log(h.r[1] / h.r[0]);
  if (h.v[0] != 0.0 && beta0 <= alpha + 0.01)
    throw InapplicableError("reduction_of_order: H too singular at the origin (local power " +
                            std::to_string(beta0) + " <= alpha)");

  RadialFunction out;
  out.r = h.r;
  out.v = detail::reduction_core(h.r, h.v, alpha, n, beta0);

  if (error_estimate != nullptr) {
    // one level of cell subdivision with power-law interpolation of H
    std::vector<double> r2, h2;
    r2.reserve(2 * m);
    h2.reserve(2 * m);
    for (int i = 0; i < m; ++i) {
      if (i > 0) {
        const double rm = std::sqrt(h.r[i - 1] * h.r[i]);
        double hm;
        if (h.v[i - 1] != 0.0 && h.v[i] != 0.0 && ((h.v[i - 1] > 0.0) == (h.v[i] > 0.0))) {
          const double p = std::log(h.v[i] / h.v[i - 1]) / std::log(h.r[i] / h.r[i - 1]);
          hm = h.v[i - 1] * std::pow(rm / h.r[i - 1], p);
        } else {
          hm = 0.5 * (h.v[i - 1] + h.v[i]);
        }
        r2.push_back(rm);
        h2.push_back(hm);
      }
      r2.push_back(h.r[i]);
      h2.push_back(h.v[i]);
    }
    const std::vector<double> v2 = detail::reduction_core(r2, h2, alpha, n, beta0);
    double err = 0.0;
    for (int i = 0; i < m; ++i) err = std::max(err, std::abs(v2[2 * i] - out.v[i]));
    *error_estimate = err;
  }
  return out;
}

struct LeadingFit {
  double c1 = 0.0;             // coefficient of r^alpha
  double remainder_slope = 0.0; // fitted exponent of |U - c1 r^alpha|
  double residual = 0.0;        // rms misfit of the two-term model, relative
  int window_points = 0;
};

/// Leading-coefficient extraction from U = C1 r^alpha + v with |v| <~ r^{1+alpha}:
/// least-squares fit of U against {r^alpha, r^{1+alpha}} on the small-r window
/// [r_min, 0.1]; the reported remainder is U - C1 r^alpha.
inline LeadingFit extract_leading(const RadialFunction& u, double alpha, double window_max = 0.1) {
  u.validate();
  std::vector<int> idx;
  for (int i = 0; i < static_cast<int>(u.r.size()); ++i)
    if (u.r[i] <= window_max) idx.push_back(i);
  if (idx.size() < 5) throw UsageError("extract_leading: window has fewer than 5 points");
  const int w = static_cast<int>(idx.size());

  Eigen::MatrixXd a(w, 2);
  Eigen::VectorXd b(w);
  for (int k = 0; k < w; ++k) {
    a(k, 0) = std::pow(u.r[idx[k]], alpha);
    a(k, 1) = std::pow(u.r[idx[k]], 1.0 + alpha);
    b(k) = u.v[idx[k]];
  }
  Eigen::Vector2d coef = a.colPivHouseholderQr().solve(b);

  LeadingFit fit;
  fit.c1 = coef(0);
  fit.window_points = w;
  double scale = 0.0;
  for (int k = 0; k < w; ++k) scale = std::max(scale, std::abs(b(k)));
  fit.residual = (scale > 0.0) ? (a * coef - b).norm() / (std::sqrt(double(w)) * scale) : 0.0;

  std::vector<double> rs, vs;
  for (int k = 0; k < w; ++k) {
    const double rem = std::abs(u.v[idx[k]] - fit.c1 * a(k, 0));
    if (rem > 1e-13 * std::max(1.0, scale)) {
      rs.push_back(u.r[idx[k]]);
      vs.push_back(rem);
    }
  }
  fit.remainder_slope = (rs.size() >= 3) ? fit_exponent(rs, vs).slope
                                         : 1.0 + alpha; // remainder at noise level: model slope
  return fit;
}

} // namespace gaplab
