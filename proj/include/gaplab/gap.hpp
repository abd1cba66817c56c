#pragma once
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "gaplab/errors.hpp"
#include "gaplab/geometry.hpp"
#include "gaplab/log.hpp"
#include "gaplab/numerics.hpp"
#include "gaplab/reduced.hpp"

namespace gaplab {

/// The neck, flattened to a box by y' = x', y_n = (x_n - g)/delta - 1/2.
/// With J the Jacobian of the map, b = J J^t / det J turns the Laplace
/// equation into div(b grad v) = 0 with the insulating walls at y_n = +-1/2
/// becoming the conormal condition b^{nj} d_j v = 0. In closed form:
///   b^{ij} = delta * I        (lateral block)
///   b^{in} = -(d_i g + (y_n + 1/2) d_i (f - g))
///   b^{nn} = (1 + sum_i (b^{in})^2) / delta.
/// n=2: lateral grid is a uniform segment [-rho, rho]; n=3: polar, radial
/// nodes on the reduced solver's cell centers plus the Dirichlet ring at rho.
struct MappedStrip {
  GapGeometry geom;
  double rho = 0.5;
  std::vector<double> lat; // n=2: x nodes; n=3: radial nodes, last = rho (Dirichlet)
  int n_theta = 1;         // n=3 only
  int n_vertical = 16;     // cells; nodes n_vertical + 1
  double max_cell_condition = 0.0;

  int n() const { return geom.n; }
  int n_lat() const { return static_cast<int>(lat.size()); }
  int n_vert_nodes() const { return n_vertical + 1; }
  int size() const { return n_lat() * n_theta * n_vert_nodes(); }
  double d_theta() const { return 2.0 * std::numbers::pi / n_theta; }
  double theta(int j) const { return d_theta() * j; }
  double y(int m) const { return -0.5 + static_cast<double>(m) / n_vertical; }
  int wrap(int j) const { return ((j % n_theta) + n_theta) % n_theta; }
  int index(int i, int j, int m) const { return (i * n_theta + wrap(j)) * n_vert_nodes() + m; }

  bool is_dirichlet(int i) const { return (n() == 2) ? (i == 0 || i == n_lat() - 1) : (i == n_lat() - 1); }

  Eigen::VectorXd lateral_point(int i, int j) const {
    if (n() == 2) return Eigen::VectorXd::Constant(1, lat[i]);
    Eigen::VectorXd x(2);
    x << lat[i] * std::cos(theta(j)), lat[i] * std::sin(theta(j));
    return x;
  }

  double delta(const Eigen::VectorXd& xp) const { return geom.epsilon + geom.profile(xp); }

  // cross coefficients b^{in} in lateral Cartesian components
  Eigen::VectorXd b_cross(const Eigen::VectorXd& xp, double yn) const {
    return -(geom.grad_g(xp) + (yn + 0.5) * geom.grad_profile(xp));
  }

  /// Full coefficient matrix in the local orthonormal frame at a point:
  /// n=2 frame (x1, y_n); n=3 frame (e_r, e_theta, y_n).
  Eigen::MatrixXd b_local(double rlat, double th, double yn) const {
    Eigen::VectorXd xp =
        (n() == 2) ? Eigen::VectorXd::Constant(1, rlat)
                   : (Eigen::VectorXd(2) << rlat * std::cos(th), rlat * std::sin(th)).finished();
    const double d = delta(xp);
    const Eigen::VectorXd c = b_cross(xp, yn);
    const int nl = n() - 1;
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(nl + 1, nl + 1);
    for (int i = 0; i < nl; ++i) b(i, i) = d;
    Eigen::VectorXd ch(nl);
    if (n() == 2) {
      ch(0) = c(0);
    } else {
      const Eigen::Vector2d er(std::cos(th), std::sin(th));
      const Eigen::Vector2d et(-std::sin(th), std::cos(th));
      ch(0) = c.dot(er);
      ch(1) = c.dot(et);
    }
    for (int i = 0; i < nl; ++i) {
      b(i, nl) = ch(i);
      b(nl, i) = ch(i);
    }
    b(nl, nl) = (1.0 + ch.squaredNorm()) / d;
    return b;
  }
};

inline MappedStrip map_strip(const GapGeometry& geom, double rho, int n_lat, int n_theta, int n_vertical,
                             double stretch = 1.03) {
  geom.validate();
  if (geom.n != 2 && geom.n != 3) throw UsageError("map_strip: only n in {2, 3}");
  if (!(rho > 0.0) || rho > geom.r0 + 1e-15) throw UsageError("map_strip: need 0 < rho <= r0");
  if (n_lat < 8 || n_vertical < 2) throw UsageError("map_strip: grid too small");
  MappedStrip s;
  s.geom = geom;
  s.rho = rho;
  s.n_vertical = n_vertical;
  if (geom.n == 2) {
    s.n_theta = 1;
    s.lat.resize(n_lat + 1);
    for (int i = 0; i <= n_lat; ++i) s.lat[i] = -rho + 2.0 * rho * i / n_lat;
  } else {
    if (n_theta < 8) throw UsageError("map_strip: need n_theta >= 8 for n=3");
    s.n_theta = n_theta;
    PolarGrid pg = PolarGrid::make(rho, n_lat, n_theta, stretch);
    s.lat = pg.centers;
    s.lat.push_back(rho);
  }
  // per-cell conditioning of b, a finiteness sanity bound
  double cond = 0.0;
  const int ni = s.n_lat() - 1;
  for (int i = 0; i < ni; ++i)
    for (int j = 0; j < s.n_theta; ++j)
      for (int m = 0; m < n_vertical; ++m) {
        const double rc = 0.5 * (s.lat[i] + s.lat[i + 1]);
        const double tc = s.theta(j) + 0.5 * s.d_theta();
        const double yc = 0.5 * (s.y(m) + s.y(m + 1));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.b_local(rc, tc, yc));
        const double lo = es.eigenvalues()(0), hi = es.eigenvalues()(geom.n - 1);
        if (!(lo > 0.0)) throw NumericalError("map_strip: coefficient matrix not positive definite");
        cond = std::max(cond, hi / lo);
      }
  s.max_cell_condition = cond;
  log::debug("map_strip: n=%d lat=%d theta=%d vert=%d, max cell condition %.3e", geom.n, s.n_lat(),
             s.n_theta, n_vertical, cond);
  return s;
}

struct GapSolution {
  MappedStrip strip;
  std::vector<double> values; // all nodes, Dirichlet included
  double max_gradient = 0.0;
  std::array<double, 3> max_gradient_location{}; // (lateral, theta, y_n)
  double flux_in = 0.0, flux_out = 0.0;          // lateral Dirichlet flux balance
  CgStats cg;

  double at(int i, int j, int m) const { return values[strip.index(i, j, m)]; }

  // strip-coordinate partial derivatives at a node
  void strip_derivatives(int i, int j, int m, double& dlat, double& dth, double& dyn) const {
    const auto& lat = strip.lat;
    if (i == 0) {
      dlat = (at(1, j, m) - at(0, j, m)) / (lat[1] - lat[0]);
    } else if (i == strip.n_lat() - 1) {
      dlat = (at(i, j, m) - at(i - 1, j, m)) / (lat[i] - lat[i - 1]);
    } else {
      const double hm = lat[i] - lat[i - 1], hp = lat[i + 1] - lat[i];
      dlat = -hp / (hm * (hm + hp)) * at(i - 1, j, m) + (hp - hm) / (hm * hp) * at(i, j, m) +
             hm / (hp * (hm + hp)) * at(i + 1, j, m);
    }
    dth = (strip.n_theta > 1) ? (at(i, j + 1, m) - at(i, j - 1, m)) / (2.0 * strip.d_theta()) : 0.0;
    const double hv = 1.0 / strip.n_vertical;
    if (m == 0) {
      dyn = (at(i, j, 1) - at(i, j, 0)) / hv;
    } else if (m == strip.n_vert_nodes() - 1) {
      dyn = (at(i, j, m) - at(i, j, m - 1)) / hv;
    } else {
      dyn = (at(i, j, m + 1) - at(i, j, m - 1)) / (2.0 * hv);
    }
  }

  /// |grad u| in the physical x coordinates (chain rule through the map).
  double physical_gradient(int i, int j, int m) const {
    double dlat, dth, dyn;
    strip_derivatives(i, j, m, dlat, dth, dyn);
    const Eigen::VectorXd xp = strip.lateral_point(i, j);
    const double d = strip.delta(xp);
    const Eigen::VectorXd c = strip.b_cross(xp, strip.y(m)) / d;
    double g2 = 0.0;
    if (strip.n() == 2) {
      const double gx = dlat + dyn * c(0);
      g2 = gx * gx;
    } else {
      const Eigen::Vector2d er(std::cos(strip.theta(j)), std::sin(strip.theta(j)));
      const Eigen::Vector2d et(-std::sin(strip.theta(j)), std::cos(strip.theta(j)));
      const double gr = dlat + dyn * c.dot(er);
      const double gt = dth / strip.lat[i] + dyn * c.dot(et);
      g2 = gr * gr + gt * gt;
    }
    const double gn = dyn / d;
    return std::sqrt(g2 + gn * gn);
  }
};

namespace detail {

// local Q1 stiffness for a box cell with constant coefficient matrix b,
// 2-point Gauss per direction (exact for the bilinear integrand)
template <int Dim>
void cell_stiffness(const std::array<double, Dim>& h, const Eigen::MatrixXd& b,
                    double ke[1 << Dim][1 << Dim]) {
  constexpr int nn = 1 << Dim;
  const double gp[2] = {-1.0 / std::numbers::sqrt3, 1.0 / std::numbers::sqrt3};
  double detj = 1.0;
  for (int d = 0; d < Dim; ++d) detj *= 0.5 * h[d];
  for (int a = 0; a < nn; ++a)
    for (int c = 0; c < nn; ++c) ke[a][c] = 0.0;

  std::array<int, Dim> gi{};
  const int ng = 1 << Dim; // 2^Dim gauss points
  for (int g = 0; g < ng; ++g) {
    std::array<double, Dim> xi;
    for (int d = 0; d < Dim; ++d) xi[d] = gp[(g >> d) & 1];
    // gradients of the 2^Dim nodal basis functions at xi, physical scaling
    Eigen::MatrixXd grad(Dim, nn);
    for (int a = 0; a < nn; ++a) {
      for (int d = 0; d < Dim; ++d) {
        double val = 0.5 * ((a >> d) & 1 ? 1.0 : -1.0);
        for (int e = 0; e < Dim; ++e) {
          if (e == d) continue;
          val *= 0.5 * (1.0 + ((a >> e) & 1 ? 1.0 : -1.0) * xi[e]);
        }
        grad(d, a) = val * 2.0 / h[d];
      }
    }
    const Eigen::MatrixXd bg = b * grad;
    for (int a = 0; a < nn; ++a)
      for (int c = 0; c < nn; ++c) ke[a][c] += grad.col(a).dot(bg.col(c)) * detj;
  }
  (void)gi;
}

} // namespace detail

/// Solve div(b grad v) = 0 on the strip: Dirichlet data phi on the lateral
/// walls (theta-sampled for n=3, {left, right} for n=2, constant in y_n),
/// natural (do-nothing) top and bottom — the discrete insulating condition:
/// no wall flux term is ever assembled. Q1 box elements with cell-constant b
/// keep the system symmetric positive definite; CG with Jacobi solves it.
inline GapSolution solve_gap(const MappedStrip& strip, const std::vector<double>& phi, double tol = 1e-10) {
  const int n = strip.n();
  if (n == 2 && phi.size() != 2) throw UsageError("solve_gap: n=2 needs {left, right} wall values");
  if (n == 3 && static_cast<int>(phi.size()) != strip.n_theta)
    throw UsageError("solve_gap: n=3 needs theta-sampled wall values");
  if (!(tol > 0.0)) throw UsageError("solve_gap: tolerance must be positive");

  const int nv = strip.n_vert_nodes();
  const int total = strip.size();
  auto dirichlet_value = [&](int i, int j) { return (n == 2) ? (i == 0 ? phi[0] : phi[1]) : phi[strip.wrap(j)]; };

  std::vector<int> free_id(total, -1);
  int n_free = 0;
  for (int i = 0; i < strip.n_lat(); ++i)
    for (int j = 0; j < strip.n_theta; ++j)
      for (int m = 0; m < nv; ++m)
        if (!strip.is_dirichlet(i)) free_id[strip.index(i, j, m)] = n_free++;

  std::vector<Triplet> trips;
  std::vector<double> rhs(n_free, 0.0);
  const int ni = strip.n_lat() - 1;
  const int nj = (n == 2) ? 1 : strip.n_theta;
  const int nm = strip.n_vertical;
  trips.reserve(static_cast<std::size_t>(ni) * nj * nm * (n == 2 ? 16 : 64) / 2);

  auto for_each_cell = [&](auto&& body) {
    for (int i = 0; i < ni; ++i)
      for (int j = 0; j < nj; ++j)
        for (int m = 0; m < nm; ++m) body(i, j, m);
  };

  auto cell_nodes_2d = [&](int i, int m, int out[4]) {
    out[0] = strip.index(i, 0, m);
    out[1] = strip.index(i + 1, 0, m);
    out[2] = strip.index(i, 0, m + 1);
    out[3] = strip.index(i + 1, 0, m + 1);
  };
  auto cell_nodes_3d = [&](int i, int j, int m, int out[8]) {
    out[0] = strip.index(i, j, m);
    out[1] = strip.index(i + 1, j, m);
    out[2] = strip.index(i, j + 1, m);
    out[3] = strip.index(i + 1, j + 1, m);
    out[4] = strip.index(i, j, m + 1);
    out[5] = strip.index(i + 1, j, m + 1);
    out[6] = strip.index(i, j + 1, m + 1);
    out[7] = strip.index(i + 1, j + 1, m + 1);
  };
  auto node_of = [&](int flat) {
    const int m = flat % nv;
    const int ij = flat / nv;
    return std::array<int, 3>{ij / strip.n_theta, ij % strip.n_theta, m};
  };

  const double hv = 1.0 / strip.n_vertical;
  for_each_cell([&](int i, int j, int m) {
    const double rc = 0.5 * (strip.lat[i] + strip.lat[i + 1]);
    const double tc = strip.theta(j) + 0.5 * strip.d_theta();
    const double yc = 0.5 * (strip.y(m) + strip.y(m + 1));
    const Eigen::MatrixXd b = strip.b_local(rc, n == 2 ? 0.0 : tc, yc);
    if (n == 2) {
      int nodes[4];
      cell_nodes_2d(i, m, nodes);
      std::array<double, 2> h{strip.lat[i + 1] - strip.lat[i], hv};
      double ke[4][4];
      detail::cell_stiffness<2>(h, b, ke);
      for (int a = 0; a < 4; ++a) {
        const int fa = free_id[nodes[a]];
        if (fa < 0) continue;
        for (int c = 0; c < 4; ++c) {
          const int fc = free_id[nodes[c]];
          if (fc >= 0) {
            trips.push_back({fa, fc, ke[a][c]});
          } else {
            const auto nc = node_of(nodes[c]);
            rhs[fa] -= ke[a][c] * dirichlet_value(nc[0], nc[1]);
          }
        }
      }
    } else {
      int nodes[8];
      cell_nodes_3d(i, j, m, nodes);
      std::array<double, 3> h{strip.lat[i + 1] - strip.lat[i], rc * strip.d_theta(), hv};
      double ke[8][8];
      detail::cell_stiffness<3>(h, b, ke);
      for (int a = 0; a < 8; ++a) {
        const int fa = free_id[nodes[a]];
        if (fa < 0) continue;
        for (int c = 0; c < 8; ++c) {
          const int fc = free_id[nodes[c]];
          if (fc >= 0) {
            trips.push_back({fa, fc, ke[a][c]});
          } else {
            const auto nc = node_of(nodes[c]);
            rhs[fa] -= ke[a][c] * dirichlet_value(nc[0], nc[1]);
          }
        }
      }
    }
  });

  SparseSystem sys = SparseSystem::from_triplets(n_free, std::move(trips), Definiteness::SPD);
  GapSolution sol;
  sol.strip = strip;
  std::vector<double> x = cg_solve(sys, rhs, tol, 0, &sol.cg);
  log::debug("solve_gap: %d unknowns, %d cg iterations, residual %.2e", n_free, sol.cg.iterations,
             sol.cg.residual);

  sol.values.resize(total);
  for (int i = 0; i < strip.n_lat(); ++i)
    for (int j = 0; j < strip.n_theta; ++j)
      for (int m = 0; m < nv; ++m) {
        const int g = strip.index(i, j, m);
        sol.values[g] = (free_id[g] >= 0) ? x[free_id[g]] : dirichlet_value(i, j);
      }

  // Dirichlet flux balance from a second element pass: the discrete flux into
  // the strip through each wall node is the stiffness residual there
  std::vector<double> wall_flux;
  {
    std::vector<double> resid(total, 0.0);
    for_each_cell([&](int i, int j, int m) {
      const double rc = 0.5 * (strip.lat[i] + strip.lat[i + 1]);
      const double tc = strip.theta(j) + 0.5 * strip.d_theta();
      const double yc = 0.5 * (strip.y(m) + strip.y(m + 1));
      const Eigen::MatrixXd b = strip.b_local(rc, n == 2 ? 0.0 : tc, yc);
      if (n == 2) {
        int nodes[4];
        cell_nodes_2d(i, m, nodes);
        std::array<double, 2> h{strip.lat[i + 1] - strip.lat[i], hv};
        double ke[4][4];
        detail::cell_stiffness<2>(h, b, ke);
        for (int a = 0; a < 4; ++a)
          for (int c = 0; c < 4; ++c) resid[nodes[a]] += ke[a][c] * sol.values[nodes[c]];
      } else {
        int nodes[8];
        cell_nodes_3d(i, j, m, nodes);
        std::array<double, 3> h{strip.lat[i + 1] - strip.lat[i], rc * strip.d_theta(), hv};
        double ke[8][8];
        detail::cell_stiffness<3>(h, b, ke);
        for (int a = 0; a < 8; ++a)
          for (int c = 0; c < 8; ++c) resid[nodes[a]] += ke[a][c] * sol.values[nodes[c]];
      }
    });
    for (int i = 0; i < strip.n_lat(); ++i) {
      if (!strip.is_dirichlet(i)) continue;
      for (int j = 0; j < strip.n_theta; ++j)
        for (int m = 0; m < nv; ++m) wall_flux.push_back(resid[strip.index(i, j, m)]);
    }
  }
  for (double f : wall_flux) {
    if (f > 0.0) sol.flux_out += f;
    else sol.flux_in -= f;
  }

  // max physical gradient, excluding the two outermost lateral node layers
  double best = -1.0;
  for (int i = 0; i < strip.n_lat(); ++i) {
    const bool near_wall = (n == 2) ? (i <= 1 || i >= strip.n_lat() - 2) : (i >= strip.n_lat() - 2);
    if (near_wall) continue;
    for (int j = 0; j < strip.n_theta; ++j)
      for (int m = 0; m < nv; ++m) {
        const double g = sol.physical_gradient(i, j, m);
        if (g > best) {
          best = g;
          sol.max_gradient_location = {strip.lat[i], strip.theta(j), strip.y(m)};
        }
      }
  }
  sol.max_gradient = best;
  return sol;
}

/// Vertical fiber average in mapped coordinates (equivalent to the slashed
/// integral over [g, eps + f] in physical coordinates by construction of the
/// map). Values on the lateral node grid, trapezoid along the fiber.
struct LateralField {
  std::vector<double> lat; // lateral nodes
  int n_theta = 1;
  std::vector<double> values; // lat-major
  double at(int i, int j) const { return values[i * n_theta + j]; }
};

inline LateralField average_vertical(const GapSolution& sol) {
  const MappedStrip& s = sol.strip;
  LateralField f;
  f.lat = s.lat;
  f.n_theta = s.n_theta;
  f.values.assign(static_cast<std::size_t>(s.n_lat()) * s.n_theta, 0.0);
  const int nv = s.n_vert_nodes();
  for (int i = 0; i < s.n_lat(); ++i)
    for (int j = 0; j < s.n_theta; ++j) {
      double acc = 0.0;
      for (int m = 0; m < nv; ++m) {
        const double w = (m == 0 || m == nv - 1) ? 0.5 : 1.0;
        acc += w * sol.at(i, j, m);
      }
      f.values[i * s.n_theta + j] = acc / s.n_vertical;
    }
  return f;
}

/// F-tilde of the averaging identity: the fiber integral of
/// [(y_n - 1/2) grad g - (y_n + 1/2) grad f] . d_n u, in lateral components,
/// evaluated at the lateral nodes with the same midpoint rule as the average.
inline void averaging_flux(const GapSolution& sol, int i, int j, double& f_lat, double& f_theta) {
  const MappedStrip& s = sol.strip;
  const Eigen::VectorXd xp = s.lateral_point(i, j);
  const Eigen::VectorXd gf = s.geom.grad_f(xp);
  const Eigen::VectorXd gg = s.geom.grad_g(xp);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(s.n() - 1);
  for (int m = 0; m < s.n_vertical; ++m) {
    const double ym = 0.5 * (s.y(m) + s.y(m + 1));
    const double dv = sol.at(i, j, m + 1) - sol.at(i, j, m); // integral of d_n v over the cell
    acc += ((ym - 0.5) * gg - (ym + 0.5) * gf) * dv;
  }
  if (s.n() == 2) {
    f_lat = acc(0);
    f_theta = 0.0;
  } else {
    const Eigen::Vector2d er(std::cos(s.theta(j)), std::sin(s.theta(j)));
    const Eigen::Vector2d et(-std::sin(s.theta(j)), std::cos(s.theta(j)));
    f_lat = acc.dot(er);
    f_theta = acc.dot(et);
  }
}

/// Residual of the discrete averaged equation d_i(delta d_i ubar) + d_i F^i = 0
/// with the true delta(x'), flux form on the lateral node grid. Returns the
/// rms residual normalized by the rms delta-flux scale; second-order small
/// when u solves the strip problem.
inline double averaged_equation_residual(const GapSolution& sol) {
  const MappedStrip& s = sol.strip;
  LateralField ubar = average_vertical(sol);
  const int nlat = s.n_lat();
  const int nth = s.n_theta;

  std::vector<double> flat(static_cast<std::size_t>(nlat) * nth), ftheta(flat.size());
  for (int i = 0; i < nlat; ++i)
    for (int j = 0; j < nth; ++j) averaging_flux(sol, i, j, flat[i * nth + j], ftheta[i * nth + j]);

  double ss = 0.0, scale = 0.0;
  int count = 0;
  auto delta_at = [&](double rlat, int j, double frac) {
    // midpoint between angular nodes when frac != 0
    if (s.n() == 2) return s.delta(Eigen::VectorXd::Constant(1, rlat));
    const double th = s.theta(j) + frac * s.d_theta();
    return s.delta((Eigen::VectorXd(2) << rlat * std::cos(th), rlat * std::sin(th)).finished());
  };

  if (s.n() == 2) {
    for (int i = 1; i + 1 < nlat; ++i) {
      const double hm = s.lat[i] - s.lat[i - 1], hp = s.lat[i + 1] - s.lat[i];
      const double xm = 0.5 * (s.lat[i - 1] + s.lat[i]), xps = 0.5 * (s.lat[i] + s.lat[i + 1]);
      const double qp = delta_at(xps, 0, 0) * (ubar.at(i + 1, 0) - ubar.at(i, 0)) / hp +
                        0.5 * (flat[i] + flat[i + 1]);
      const double qm = delta_at(xm, 0, 0) * (ubar.at(i, 0) - ubar.at(i - 1, 0)) / hm +
                        0.5 * (flat[i] + flat[i - 1]);
      const double vol = 0.5 * (hm + hp);
      const double r = (qp - qm) / vol;
      const double sc = (std::abs(qp) + std::abs(qm)) / vol;
      ss += r * r;
      scale += sc * sc;
      ++count;
    }
  } else {
    for (int i = 1; i + 1 < nlat; ++i) {
      const double hm = s.lat[i] - s.lat[i - 1], hp = s.lat[i + 1] - s.lat[i];
      const double rm = 0.5 * (s.lat[i - 1] + s.lat[i]), rp = 0.5 * (s.lat[i] + s.lat[i + 1]);
      const double ri = s.lat[i];
      const double dth = s.d_theta();
      for (int j = 0; j < nth; ++j) {
        const int jp = s.wrap(j + 1), jm = s.wrap(j - 1);
        const double qp = rp * dth * (delta_at(rp, j, 0.0) * (ubar.at(i + 1, j) - ubar.at(i, j)) / hp +
                                      0.5 * (flat[i * nth + j] + flat[(i + 1) * nth + j]));
        const double qm = rm * dth * (delta_at(rm, j, 0.0) * (ubar.at(i, j) - ubar.at(i - 1, j)) / hm +
                                      0.5 * (flat[i * nth + j] + flat[(i - 1) * nth + j]));
        const double w = 0.5 * (hm + hp);
        const double tp = w * (delta_at(ri, j, 0.5) * (ubar.at(i, jp) - ubar.at(i, j)) / (ri * dth) +
                               0.5 * (ftheta[i * nth + j] + ftheta[i * nth + jp]));
        const double tm = w * (delta_at(ri, j, -0.5) * (ubar.at(i, j) - ubar.at(i, jm)) / (ri * dth) +
                               0.5 * (ftheta[i * nth + j] + ftheta[i * nth + jm]));
        const double vol = ri * w * dth;
        const double r = (qp - qm + tp - tm) / vol;
        const double sc = (std::abs(qp) + std::abs(qm) + std::abs(tp) + std::abs(tm)) / vol;
        ss += r * r;
        scale += sc * sc;
        ++count;
      }
    }
  }
  return std::sqrt(ss / count) / std::sqrt(scale / count);
}

} // namespace gaplab
