#pragma once
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "gaplab/errors.hpp"
#include "gaplab/fit.hpp"
#include "gaplab/geometry.hpp"
#include "gaplab/numerics.hpp"
#include "gaplab/spectral.hpp"

namespace gaplab {

/// Cell-centered polar grid on the disk B_R. Radial faces grow geometrically
/// (ratio `stretch`) from the origin so that rings near r ~ sqrt(eps) stay
/// resolved deep into the sweep; cells sit at face midpoints, the origin
/// carries no unknown. Theta is uniform periodic.
struct PolarGrid {
  double radius = 1.0;
  int n_r = 0;
  int n_theta = 0;
  double stretch = 1.03;
  std::vector<double> faces;   // n_r + 1, faces[0] = 0, faces[n_r] = radius
  std::vector<double> centers; // n_r
  double d_theta = 0.0;

  static PolarGrid make(double radius, int n_r, int n_theta, double stretch = 1.03) {
    if (!(radius > 0.0) || n_r < 4 || n_theta < 8 || !(stretch >= 1.0))
      throw UsageError("PolarGrid: bad parameters");
    PolarGrid g;
    g.radius = radius;
    g.n_r = n_r;
    g.n_theta = n_theta;
    g.stretch = stretch;
    g.d_theta = 2.0 * std::numbers::pi / n_theta;
    g.faces.resize(n_r + 1);
    g.faces[0] = 0.0;
    const double w1 = (stretch == 1.0) ? radius / n_r
                                       : radius * (stretch - 1.0) / (std::pow(stretch, n_r) - 1.0);
    double w = w1;
    for (int i = 1; i <= n_r; ++i) {
      g.faces[i] = g.faces[i - 1] + w;
      w *= stretch;
    }
    g.faces[n_r] = radius;
    g.centers.resize(n_r);
    for (int i = 0; i < n_r; ++i) g.centers[i] = 0.5 * (g.faces[i] + g.faces[i + 1]);
    return g;
  }

  int size() const { return n_r * n_theta; }
  int wrap(int j) const { return ((j % n_theta) + n_theta) % n_theta; }
  int index(int i, int j) const { return i * n_theta + wrap(j); }
  double theta(int j) const { return d_theta * j; }
  double cell_width(int i) const { return faces[i + 1] - faces[i]; }
  double cell_volume(int i) const { return centers[i] * cell_width(i) * d_theta; }

  int ring_nearest(double rho) const {
    int best = 0;
    for (int i = 1; i < n_r; ++i)
      if (std::abs(centers[i] - rho) < std::abs(centers[best] - rho)) best = i;
    return best;
  }
};

/// Right-hand side data for the reduced equation div(kappa grad v) = div F + G.
/// F is stored in physical polar components at the nodes; empty vectors mean
/// identically zero.
struct Forcing {
  std::vector<double> radial;
  std::vector<double> angular;
  std::vector<double> source;

  bool has_flux() const { return !radial.empty() || !angular.empty(); }
  bool has_source() const { return !source.empty(); }
  bool empty() const { return !has_flux() && !has_source(); }

  void validate(int n) const {
    auto chk = [&](const std::vector<double>& v, const char* name) {
      if (!v.empty() && static_cast<int>(v.size()) != n)
        throw UsageError(std::string("Forcing: ") + name + " has wrong size");
    };
    chk(radial, "radial");
    chk(angular, "angular");
    chk(source, "source");
  }
};

struct RadialProfile {
  std::vector<double> rho;
  std::vector<double> value;
};

/// Scalar field on the polar grid with the machinery the averaging argument
/// needs: the a-weighted center value and gradient evaluation.
struct DiskField {
  PolarGrid grid;
  Weight weight;
  double epsilon = 0.0;
  std::vector<double> values;
  double center_value = 0.0;

  double at(int i, int j) const { return values[grid.index(i, j)]; }

  void compute_center_value() {
    double num = 0.0, den = 0.0;
    for (int j = 0; j < grid.n_theta; ++j) {
      num += weight.samples[j] * at(0, j);
      den += weight.samples[j];
    }
    center_value = num / den;
  }

  // physical gradient components at a node, one-sided at the radial ends
  void gradient(int i, int j, double& gr, double& gt) const {
    const auto& r = grid.centers;
    if (i == 0) {
      gr = (at(1, j) - at(0, j)) / (r[1] - r[0]);
    } else if (i == grid.n_r - 1) {
      gr = (at(i, j) - at(i - 1, j)) / (r[i] - r[i - 1]);
    } else {
      const double hm = r[i] - r[i - 1], hp = r[i + 1] - r[i];
      gr = -hp / (hm * (hm + hp)) * at(i - 1, j) + (hp - hm) / (hm * hp) * at(i, j) +
           hm / (hp * (hm + hp)) * at(i + 1, j);
    }
    gt = (at(i, j + 1) - at(i, j - 1)) / (2.0 * grid.d_theta * r[i]);
  }

  double gradient_magnitude(int i, int j) const {
    double gr, gt;
    gradient(i, j, gr, gt);
    return std::sqrt(gr * gr + gt * gt);
  }

  /// Max |grad v| over the grid, excluding `skip_outer` boundary rings.
  double max_gradient(int skip_outer = 2, int* ring = nullptr) const {
    double best = 0.0;
    int besti = 0;
    for (int i = 0; i < grid.n_r - skip_outer; ++i)
      for (int j = 0; j < grid.n_theta; ++j) {
        const double g = gradient_magnitude(i, j);
        if (g > best) {
          best = g;
          besti = i;
        }
      }
    if (ring) *ring = besti;
    return best;
  }

  std::vector<double> ring(int i) const {
    std::vector<double> u(grid.n_theta);
    for (int j = 0; j < grid.n_theta; ++j) u[j] = at(i, j);
    return u;
  }
};

/// Conservative finite-volume operator for div(kappa grad u) on the polar
/// grid, assembled from face transmissibilities. Radial faces sample kappa at
/// the node angle, angular faces at the face angle; the origin face has zero
/// area and drops out. Dirichlet data enters through the outer face.
struct DiskOperator {
  PolarGrid grid;
  std::vector<double> t_rad; // (n_r - 1) x n_theta, face between rings i and i+1
  std::vector<double> t_ang; // n_r x n_theta, face between j and j+1
  std::vector<double> t_bnd; // n_theta, outer Dirichlet face

  SparseSystem matrix() const {
    std::vector<Triplet> t;
    const int nt = grid.n_theta;
    for (int i = 0; i + 1 < grid.n_r; ++i)
      for (int j = 0; j < nt; ++j) {
        const double c = t_rad[i * nt + j];
        const int a = grid.index(i, j), b = grid.index(i + 1, j);
        t.push_back({a, a, c});
        t.push_back({b, b, c});
        t.push_back({a, b, -c});
        t.push_back({b, a, -c});
      }
    for (int i = 0; i < grid.n_r; ++i)
      for (int j = 0; j < nt; ++j) {
        const double c = t_ang[i * nt + j];
        const int a = grid.index(i, j), b = grid.index(i, j + 1);
        t.push_back({a, a, c});
        t.push_back({b, b, c});
        t.push_back({a, b, -c});
        t.push_back({b, a, -c});
      }
    for (int j = 0; j < nt; ++j) {
      const int a = grid.index(grid.n_r - 1, j);
      t.push_back({a, a, t_bnd[j]});
    }
    return SparseSystem::from_triplets(grid.size(), std::move(t), Definiteness::SPD);
  }

  std::vector<double> boundary_rhs(const std::vector<double>& boundary) const {
    std::vector<double> b(grid.size(), 0.0);
    for (int j = 0; j < grid.n_theta; ++j) b[grid.index(grid.n_r - 1, j)] += t_bnd[j] * boundary[j];
    return b;
  }

  /// A u - b(boundary): equals -vol * (div kappa grad u)_h on every cell when
  /// u is a sampled function with the given trace at r = R.
  std::vector<double> apply(const std::vector<double>& u, const std::vector<double>& boundary) const {
    const int nt = grid.n_theta;
    std::vector<double> out(grid.size(), 0.0);
    for (int i = 0; i < grid.n_r; ++i)
      for (int j = 0; j < nt; ++j) {
        const int me = grid.index(i, j);
        double s = 0.0;
        if (i + 1 < grid.n_r) s += t_rad[i * nt + j] * (u[me] - u[grid.index(i + 1, j)]);
        if (i > 0) s += t_rad[(i - 1) * nt + j] * (u[me] - u[grid.index(i - 1, j)]);
        s += t_ang[i * nt + j] * (u[me] - u[grid.index(i, j + 1)]);
        s += t_ang[i * nt + grid.wrap(j - 1)] * (u[me] - u[grid.index(i, j - 1)]);
        if (i == grid.n_r - 1) s += t_bnd[j] * (u[me] - boundary[j]);
        out[me] = s;
      }
    return out;
  }
};

inline DiskOperator assemble_disk_operator(const PolarGrid& grid,
                                           const std::function<double(double, double)>& kappa) {
  DiskOperator op;
  op.grid = grid;
  const int nt = grid.n_theta;
  op.t_rad.resize(static_cast<std::size_t>(grid.n_r - 1) * nt);
  op.t_ang.resize(static_cast<std::size_t>(grid.n_r) * nt);
  op.t_bnd.resize(nt);
  for (int i = 0; i + 1 < grid.n_r; ++i) {
    const double s = grid.faces[i + 1];
    const double dr = grid.centers[i + 1] - grid.centers[i];
    for (int j = 0; j < nt; ++j) op.t_rad[i * nt + j] = kappa(s, grid.theta(j)) * s * grid.d_theta / dr;
  }
  for (int i = 0; i < grid.n_r; ++i) {
    const double r = grid.centers[i];
    const double w = grid.cell_width(i);
    for (int j = 0; j < nt; ++j)
      op.t_ang[i * nt + j] = kappa(r, grid.theta(j) + 0.5 * grid.d_theta) * w / (r * grid.d_theta);
  }
  {
    const double R = grid.radius;
    const double dr = R - grid.centers[grid.n_r - 1];
    for (int j = 0; j < nt; ++j) op.t_bnd[j] = kappa(R, grid.theta(j)) * R * grid.d_theta / dr;
  }
  return op;
}

inline DiskOperator assemble_reduced_operator(const PolarGrid& grid, const Weight& w, double eps) {
  return assemble_disk_operator(grid, [&](double r, double th) { return eps + w.at_angle(th) * r * r; });
}

/// -int_cell (div F + G): divergence forcing enters as flux differences of
/// face-interpolated F, never by differentiating F pointwise.
inline std::vector<double> forcing_rhs(const PolarGrid& grid, const Forcing& f) {
  const int nt = grid.n_theta;
  std::vector<double> b(grid.size(), 0.0);
  auto fr = [&](int i, int j) { return f.radial.empty() ? 0.0 : f.radial[grid.index(i, j)]; };
  auto ft = [&](int i, int j) { return f.angular.empty() ? 0.0 : f.angular[grid.index(i, j)]; };
  if (f.has_flux()) {
    for (int i = 0; i < grid.n_r; ++i)
      for (int j = 0; j < nt; ++j) {
        const int me = grid.index(i, j);
        double flux_out = 0.0;
        if (i + 1 < grid.n_r)
          flux_out += 0.5 * (fr(i, j) + fr(i + 1, j)) * grid.faces[i + 1] * grid.d_theta;
        else
          flux_out += fr(i, j) * grid.radius * grid.d_theta; // one-sided at the wall
        if (i > 0) flux_out -= 0.5 * (fr(i, j) + fr(i - 1, j)) * grid.faces[i] * grid.d_theta;
        flux_out += 0.5 * (ft(i, j) + ft(i, j + 1)) * grid.cell_width(i);
        flux_out -= 0.5 * (ft(i, j) + ft(i, j - 1)) * grid.cell_width(i);
        b[me] -= flux_out;
      }
  }
  if (f.has_source())
    for (int i = 0; i < grid.n_r; ++i)
      for (int j = 0; j < nt; ++j) b[grid.index(i, j)] -= f.source[grid.index(i, j)] * grid.cell_volume(i);
  return b;
}

/// Solve div((eps + a(theta) r^2) grad v) = div F + G on the disk with
/// Dirichlet data on r = R. eps = 0 is the degenerate operator of the
/// mean-value lemma and admits homogeneous forcing only.
inline DiskField solve_reduced(const Weight& w, double eps, const PolarGrid& grid,
                               const std::vector<double>& boundary, const Forcing& forcing = {},
                               double tol = 1e-10, CgStats* stats = nullptr) {
  if (w.n != 3) throw UsageError("solve_reduced: disk solver is n=3 only");
  if (w.n_theta != grid.n_theta) throw UsageError("solve_reduced: weight grid must match the solver grid");
  if (static_cast<int>(boundary.size()) != grid.n_theta)
    throw UsageError("solve_reduced: boundary data must be theta-sampled on the grid");
  if (eps < 0.0) throw UsageError("solve_reduced: eps must be nonnegative");
  forcing.validate(grid.size());
  if (eps == 0.0 && !forcing.empty())
    throw UsageError("solve_reduced: eps = 0 requires homogeneous forcing");

  DiskOperator op = assemble_reduced_operator(grid, w, eps);
  SparseSystem sys = op.matrix();
  std::vector<double> rhs = op.boundary_rhs(boundary);
  if (!forcing.empty()) {
    const std::vector<double> fb = forcing_rhs(grid, forcing);
    for (int i = 0; i < grid.size(); ++i) rhs[i] += fb[i];
  }

  DiskField field;
  field.grid = grid;
  field.weight = w;
  field.epsilon = eps;
  field.values = cg_solve(sys, rhs, tol, 0, stats);
  field.compute_center_value();
  return field;
}

/// Mode profile U(rho_i) = <a (v(rho_i, .) - v(0')), Y> per ring.
inline RadialProfile project_mode(const DiskField& field, const std::vector<double>& y) {
  if (static_cast<int>(y.size()) != field.grid.n_theta)
    throw UsageError("project_mode: eigenfunction must be sampled on the field's theta grid");
  RadialProfile p;
  p.rho = field.grid.centers;
  p.value.resize(field.grid.n_r);
  for (int i = 0; i < field.grid.n_r; ++i) {
    std::vector<double> centered = field.ring(i);
    for (double& v : centered) v -= field.center_value;
    p.value[i] = weighted_inner(centered, y, field.weight);
  }
  return p;
}

/// omega(rho): a-weighted rms of the centered field on the ring nearest rho.
inline double mode_norm(const DiskField& field, double rho) {
  if (!(rho > 0.0) || rho > field.grid.radius + 1e-12) throw UsageError("mode_norm: rho outside (0, R]");
  const int i = field.grid.ring_nearest(rho);
  std::vector<double> centered = field.ring(i);
  for (double& v : centered) v -= field.center_value;
  return std::sqrt(weighted_inner(centered, centered, field.weight));
}

inline RadialProfile omega_profile(const DiskField& field) {
  RadialProfile p;
  p.rho = field.grid.centers;
  p.value.resize(field.grid.n_r);
  for (int i = 0; i < field.grid.n_r; ++i) {
    std::vector<double> centered = field.ring(i);
    for (double& v : centered) v -= field.center_value;
    p.value[i] = std::sqrt(weighted_inner(centered, centered, field.weight));
  }
  return p;
}

/// sup over grid nodes of |F| / (|x|^sigma (eps + a |x|^2)^{1-s}).
inline double weighted_norm(const PolarGrid& grid, const Weight& w, double eps,
                            const std::vector<double>& magnitude, double sigma, double s) {
  if (static_cast<int>(magnitude.size()) != grid.size()) throw UsageError("weighted_norm: size mismatch");
  double sup = 0.0;
  for (int i = 0; i < grid.n_r; ++i)
    for (int j = 0; j < grid.n_theta; ++j) {
      const double r = grid.centers[i];
      const double den = std::pow(r, sigma) * std::pow(eps + w.samples[j] * r * r, 1.0 - s);
      sup = std::max(sup, std::abs(magnitude[grid.index(i, j)]) / den);
    }
  return sup;
}

inline double weighted_norm(const PolarGrid& grid, const Weight& w, double eps, const Forcing& f,
                            double sigma, double s) {
  std::vector<double> mag(grid.size(), 0.0);
  for (int k = 0; k < grid.size(); ++k) {
    const double a = f.radial.empty() ? 0.0 : f.radial[k];
    const double b = f.angular.empty() ? 0.0 : f.angular[k];
    mag[k] = std::sqrt(a * a + b * b);
  }
  return weighted_norm(grid, w, eps, mag, sigma, s);
}

struct BarrierReport {
  double min_ratio = 0.0;       // min over cells of L_eps psi / |psi|
  double continuum_bound = 0.0; // 1/C0 = (alpha_tilde - alpha) tr(M) / 2
  double threshold = 0.0;       // pass mark: half the continuum bound
  bool passed = false;
};

/// Lemma-2.3-style barrier verification: apply the discrete L_eps to
/// psi = -(eps + a |x|^2)^{(alpha - alpha_tilde)/2} and check that the ratio
/// against |psi| stays above a positive constant. The smallness hypothesis on
/// alpha_tilde is verified on the grid first; violation is inapplicability.
inline BarrierReport barrier_check(const Weight& w, double eps, double alpha, double alpha_tilde,
                                   const PolarGrid& grid) {
  if (w.n != 3 || w.n_theta != grid.n_theta) throw UsageError("barrier_check: weight grid must match");
  if (!(alpha_tilde >= alpha) || !(alpha_tilde < 1.0))
    throw UsageError("barrier_check: need alpha <= alpha_tilde < 1");
  const Eigen::Matrix2d m = w.m;
  const double tr = m.trace();
  const double da = alpha_tilde - alpha;

  // (alpha_tilde - alpha) |M x|^2 / (eps + a |x|^2) <= tr(M) / 2 on the grid
  for (int j = 0; j < grid.n_theta; ++j) {
    const Eigen::Vector2d xi(std::cos(grid.theta(j)), std::sin(grid.theta(j)));
    const double mx2 = (m * xi).squaredNorm();
    const double a = w.samples[j];
    for (double r : {grid.centers[grid.n_r - 1], grid.radius}) {
      if (da * r * r * mx2 / (eps + a * r * r) > 0.5 * tr)
        throw InapplicableError("barrier_check: alpha_tilde violates the smallness condition on this disk");
    }
  }

  const double p = 0.5 * (alpha - alpha_tilde);
  auto psi = [&](double r, double th) { return -std::pow(eps + w.at_angle(th) * r * r, p); };
  std::vector<double> psi_v(grid.size());
  for (int i = 0; i < grid.n_r; ++i)
    for (int j = 0; j < grid.n_theta; ++j) psi_v[grid.index(i, j)] = psi(grid.centers[i], grid.theta(j));
  std::vector<double> psi_b(grid.n_theta);
  for (int j = 0; j < grid.n_theta; ++j) psi_b[j] = psi(grid.radius, grid.theta(j));

  DiskOperator op = assemble_reduced_operator(grid, w, eps);
  const std::vector<double> au = op.apply(psi_v, psi_b);

  BarrierReport rep;
  rep.continuum_bound = 0.5 * da * tr;
  rep.threshold = 0.5 * rep.continuum_bound;
  double mn = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid.n_r; ++i)
    for (int j = 0; j < grid.n_theta; ++j) {
      const double leps = -au[grid.index(i, j)] / grid.cell_volume(i);
      mn = std::min(mn, leps / -psi_v[grid.index(i, j)]);
    }
  rep.min_ratio = mn;
  rep.passed = mn >= rep.threshold;
  return rep;
}

struct FiveWayDecomposition {
  DiskField vbar;
  DiskField v1, v2, v3, v4, v5;
  double sum_mismatch = 0.0;  // sup |v1+..+v5 - vbar|
  double sup_v1 = 0.0, sup_v2 = 0.0, sup_v3 = 0.0, sup_v4 = 0.0, sup_v5 = 0.0;
};

/// Proposition-3.1-style decomposition vbar = v1 + v2 + v3 + v4 + v5:
/// v1 solves the eps = 0 problem with vbar's boundary data, v2 absorbs
/// -eps Laplace(v1) (discrete Laplacian), v3 carries G, v4 div F1, v5 div F2.
/// The face transmissibilities are affine in eps, so the pieces recombine to
/// vbar up to solver tolerance exactly.
inline FiveWayDecomposition decompose_five(const Weight& w, double eps, const PolarGrid& grid,
                                           const std::vector<double>& boundary, const Forcing& f1,
                                           const Forcing& f2, const std::vector<double>& g_source,
                                           double tol = 1e-10) {
  if (eps <= 0.0) throw UsageError("decompose_five: eps must be positive");
  if (f1.has_source() || f2.has_source())
    throw UsageError("decompose_five: F1/F2 carry flux only; pass G separately");
  f1.validate(grid.size());
  f2.validate(grid.size());
  if (!g_source.empty() && static_cast<int>(g_source.size()) != grid.size())
    throw UsageError("decompose_five: G has wrong size");

  Forcing combined;
  combined.radial.assign(grid.size(), 0.0);
  combined.angular.assign(grid.size(), 0.0);
  for (int k = 0; k < grid.size(); ++k) {
    combined.radial[k] = (f1.radial.empty() ? 0.0 : f1.radial[k]) + (f2.radial.empty() ? 0.0 : f2.radial[k]);
    combined.angular[k] = (f1.angular.empty() ? 0.0 : f1.angular[k]) + (f2.angular.empty() ? 0.0 : f2.angular[k]);
  }
  combined.source = g_source;

  FiveWayDecomposition d;
  d.vbar = solve_reduced(w, eps, grid, boundary, combined, tol);
  d.v1 = solve_reduced(w, 0.0, grid, boundary, {}, tol);

  DiskOperator op_eps = assemble_reduced_operator(grid, w, eps);
  SparseSystem sys = op_eps.matrix();
  auto zero_bd_solve = [&](const std::vector<double>& rhs) {
    DiskField f;
    f.grid = grid;
    f.weight = w;
    f.epsilon = eps;
    f.values = cg_solve(sys, rhs, tol);
    f.compute_center_value();
    return f;
  };

  // L_eps v2 = -eps * Lap_h v1: the rhs is -eps times the plain-Laplacian
  // flux balance of v1 (with v1's own boundary trace), which is exactly
  // -int_cell eps Lap v1 in the discrete algebra
  DiskOperator op_lap = assemble_disk_operator(grid, [](double, double) { return 1.0; });
  std::vector<double> lap_bal = op_lap.apply(d.v1.values, boundary);
  std::vector<double> rhs2(grid.size());
  for (int k = 0; k < grid.size(); ++k) rhs2[k] = -eps * lap_bal[k];
  d.v2 = zero_bd_solve(rhs2);

  Forcing fg;
  fg.source = g_source;
  d.v3 = zero_bd_solve(g_source.empty() ? std::vector<double>(grid.size(), 0.0) : forcing_rhs(grid, fg));
  d.v4 = zero_bd_solve(forcing_rhs(grid, f1));
  d.v5 = zero_bd_solve(forcing_rhs(grid, f2));

  auto supnorm = [](const DiskField& f) {
    double s = 0.0;
    for (double v : f.values) s = std::max(s, std::abs(v));
    return s;
  };
  d.sup_v1 = supnorm(d.v1);
  d.sup_v2 = supnorm(d.v2);
  d.sup_v3 = supnorm(d.v3);
  d.sup_v4 = supnorm(d.v4);
  d.sup_v5 = supnorm(d.v5);
  for (int k = 0; k < grid.size(); ++k) {
    const double sum = d.v1.values[k] + d.v2.values[k] + d.v3.values[k] + d.v4.values[k] + d.v5.values[k];
    d.sum_mismatch = std::max(d.sum_mismatch, std::abs(sum - d.vbar.values[k]));
  }
  return d;
}

} // namespace gaplab
