#pragma once
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "gaplab/errors.hpp"
#include "gaplab/geometry.hpp"
#include "gaplab/numerics.hpp"

namespace gaplab {

/// Stiffness/mass pencil for -div_S(a grad u) = lambda a u, assembled in
/// conservative flux form with midpoint weight sampling. Both matrices carry
/// the same 1/|S| scale, so mass-orthonormal eigenvectors are orthonormal
/// under the normalized weighted inner product.
struct SphereOperator {
  EigenProblemPair pair;
  double total_measure = 0.0;
};

inline SphereOperator assemble_sphere_operator(const Weight& w) {
  SphereOperator op;
  std::vector<Triplet> tk, tm;
  if (w.n == 3) {
    const int N = w.n_theta;
    const double h = 2.0 * std::numbers::pi / N;
    const double W = N * h;
    op.total_measure = W;
    for (int j = 0; j < N; ++j) {
      const int jp = (j + 1) % N;
      const double af = w.at_angle((j + 0.5) * h) / (h * W);
      tk.push_back({j, j, af});
      tk.push_back({jp, jp, af});
      tk.push_back({j, jp, -af});
      tk.push_back({jp, j, -af});
      tm.push_back({j, j, w.samples[j] * h / W});
    }
    op.pair.stiffness = SparseSystem::from_triplets(N, std::move(tk), Definiteness::SPSD);
    op.pair.mass = SparseSystem::from_triplets(N, std::move(tm), Definiteness::SPD);
  } else if (w.n == 4) {
    const int NP = w.n_phi, NT = w.n_theta;
    const double dphi = std::numbers::pi / NP;
    const double dth = 2.0 * std::numbers::pi / NT;
    double W = 0.0;
    for (int i = 0; i < NP; ++i) W += std::sin(w.phi(i)) * dphi * dth * NT;
    op.total_measure = W;
    auto id = [&](int i, int j) { return i * NT + ((j % NT) + NT) % NT; };
    for (int i = 0; i < NP; ++i) {
      const double phi = w.phi(i);
      for (int j = 0; j < NT; ++j) {
        // latitude face between rows i and i+1; the metric factor sin(phi)
        // vanishes at the poles, which closes the grid without a pole node
        if (i + 1 < NP) {
          const double pf = (i + 1) * dphi;
          const double c = w.at_sphere(pf, w.theta(j)) * std::sin(pf) * dth / dphi / W;
          tk.push_back({id(i, j), id(i, j), c});
          tk.push_back({id(i + 1, j), id(i + 1, j), c});
          tk.push_back({id(i, j), id(i + 1, j), -c});
          tk.push_back({id(i + 1, j), id(i, j), -c});
        }
        const double c = w.at_sphere(phi, (j + 0.5) * dth) * dphi / (std::sin(phi) * dth) / W;
        tk.push_back({id(i, j), id(i, j), c});
        tk.push_back({id(i, j + 1), id(i, j + 1), c});
        tk.push_back({id(i, j), id(i, j + 1), -c});
        tk.push_back({id(i, j + 1), id(i, j), -c});
        tm.push_back({id(i, j), id(i, j), w.samples[id(i, j)] * std::sin(phi) * dphi * dth / W});
      }
    }
    const int n = NP * NT;
    op.pair.stiffness = SparseSystem::from_triplets(n, std::move(tk), Definiteness::SPSD);
    op.pair.mass = SparseSystem::from_triplets(n, std::move(tm), Definiteness::SPD);
  } else {
    throw UsageError("assemble_sphere_operator: only n in {3, 4}");
  }
  return op;
}

/// Normalized weighted inner product <u,v> = avg of a(xi) u v over the sphere,
/// trapezoid quadrature on the periodic grid.
inline double weighted_inner(const std::vector<double>& u, const std::vector<double>& v, const Weight& w) {
  if (static_cast<int>(u.size()) != w.size() || static_cast<int>(v.size()) != w.size())
    throw UsageError("weighted_inner: sample grids do not match the weight");
  double num = 0.0, den = 0.0;
  if (w.n == 3) {
    for (int j = 0; j < w.n_theta; ++j) {
      num += w.samples[j] * u[j] * v[j];
      den += 1.0;
    }
  } else {
    for (int i = 0; i < w.n_phi; ++i) {
      const double q = std::sin(w.phi(i));
      for (int j = 0; j < w.n_theta; ++j) {
        const int k = i * w.n_theta + j;
        num += q * w.samples[k] * u[k] * v[k];
        den += q;
      }
    }
  }
  return num / den;
}

/// Rayleigh quotient <a |grad u|^2> / <a u^2> evaluated with the same discrete
/// operator the eigensolver uses (u^t K u / u^t M u on the assembled pencil).
inline double rayleigh(const std::vector<double>& u, const Weight& w) {
  if (static_cast<int>(u.size()) != w.size()) throw UsageError("rayleigh: sample grid does not match the weight");
  SphereOperator op = assemble_sphere_operator(w);
  const std::vector<double> Ku = op.pair.stiffness.multiply(u);
  const std::vector<double> Mu = op.pair.mass.multiply(u);
  double num = 0.0, den = 0.0;
  for (int i = 0; i < op.pair.stiffness.dim; ++i) {
    num += u[i] * Ku[i];
    den += u[i] * Mu[i];
  }
  if (!(den > 0.0)) throw UsageError("rayleigh: trial function has zero weighted norm");
  return num / den;
}

struct EigenCluster {
  int first = 0;
  int count = 0;
  double value = 0.0; // mean extrapolated eigenvalue of the cluster
};

struct SpectralBasis {
  Weight weight;
  int grid_n = 0;                            // N (n=3: theta count; n=4: latitude count)
  std::vector<double> eigenvalues;           // raw values at N, ascending
  std::vector<double> refined_eigenvalues;   // raw values at 2N
  std::vector<double> extrapolated;          // Richardson-combined, per index
  std::vector<double> error_bars;            // |lambda_2N - lambda_N| / 3
  Eigen::MatrixXd eigenfunctions;            // size x k, orthonormal under weighted_inner
  double lambda1 = 0.0;                      // extrapolated first nonzero eigenvalue
  double lambda1_error = 0.0;
  int lambda1_index = -1;
  std::vector<EigenCluster> clusters;

  int lambda1_multiplicity() const {
    for (const auto& c : clusters)
      if (lambda1_index >= c.first && lambda1_index < c.first + c.count) return c.count;
    return 1;
  }
};

struct SpectrumOptions {
  EigOptions eig;
  double cluster_rel_tol = 1e-7;   // exact-degeneracy clustering
  double lambda1_threshold = 1e-8; // first eigenvalue above this is lambda1
};

inline Weight refine_weight(const Weight& w) {
  GapGeometry g;
  g.n = w.n;
  g.hessian = w.m;
  g.epsilon = 1.0;
  g.r0 = 1.0;
  return build_weight(g, (w.n == 3 ? w.n_theta : w.n_phi) * 2);
}

/// Solve the weighted sphere eigenproblem at the weight's resolution and at
/// the doubled resolution; report lambda1 with a self-convergence error bar.
inline SpectralBasis solve_spectrum(const Weight& w, int k, const SpectrumOptions& opt = {}) {
  if (k < 2) throw UsageError("solve_spectrum: need k >= 2");
  if (w.n != 3 && w.n != 4) throw UsageError("solve_spectrum: only n in {3, 4}");

  SphereOperator op = assemble_sphere_operator(w);
  GenEigResult coarse = sym_gen_eig(op.pair, k, opt.eig);

  Weight wf = refine_weight(w);
  SphereOperator opf = assemble_sphere_operator(wf);
  GenEigResult fine = sym_gen_eig(opf.pair, k, opt.eig);

  SpectralBasis basis;
  basis.weight = w;
  basis.grid_n = (w.n == 3) ? w.n_theta : w.n_phi;
  basis.eigenvalues = coarse.eigenvalues;
  basis.refined_eigenvalues = fine.eigenvalues;
  basis.eigenfunctions = coarse.vectors;
  basis.extrapolated.resize(k);
  basis.error_bars.resize(k);
  for (int i = 0; i < k; ++i) {
    const double d = fine.eigenvalues[i] - coarse.eigenvalues[i];
    basis.extrapolated[i] = fine.eigenvalues[i] + d / 3.0; // second-order scheme
    basis.error_bars[i] = std::abs(d) / 3.0;
  }

  // cluster the extrapolated values; the tolerance covers exact degeneracy
  // and the residual discretization splitting within an error bar
  double scale = 1.0;
  for (double v : basis.extrapolated) scale = std::max(scale, std::abs(v));
  for (int i = 0; i < k; ++i) {
    const double tol =
        std::max(opt.cluster_rel_tol * scale, 3.0 * (basis.error_bars[i] + (i > 0 ? basis.error_bars[i - 1] : 0.0)));
    if (i == 0 || basis.extrapolated[i] - basis.extrapolated[i - 1] > tol) {
      basis.clusters.push_back({i, 1, basis.extrapolated[i]});
    } else {
      auto& c = basis.clusters.back();
      c.value = (c.value * c.count + basis.extrapolated[i]) / (c.count + 1);
      ++c.count;
    }
  }

  for (int i = 0; i < k; ++i) {
    if (basis.extrapolated[i] > opt.lambda1_threshold * scale) {
      basis.lambda1_index = i;
      break;
    }
  }
  if (basis.lambda1_index < 0)
    throw NumericalError("solve_spectrum: no eigenvalue above the zero-mode threshold; increase k");
  basis.lambda1 = basis.extrapolated[basis.lambda1_index];
  basis.lambda1_error = basis.error_bars[basis.lambda1_index];
  // widen the bar by the spread of the lambda1 cluster
  for (const auto& c : basis.clusters) {
    if (basis.lambda1_index >= c.first && basis.lambda1_index < c.first + c.count) {
      for (int i = c.first; i < c.first + c.count; ++i) {
        basis.lambda1_error = std::max(basis.lambda1_error,
                                       basis.error_bars[i] + std::abs(basis.extrapolated[i] - basis.lambda1));
      }
    }
  }
  return basis;
}

enum class Parity { Even, Odd, Mixed };

/// Index permutation realizing xi_axis -> -xi_axis on the sample grid.
inline std::vector<int> reflection_map(const Weight& w, int axis) {
  std::vector<int> map(w.size());
  if (w.n == 3) {
    const int N = w.n_theta;
    if (axis != 1 && axis != 2) throw UsageError("reflection_map: axis must be 1 or 2 for n=3");
    for (int j = 0; j < N; ++j) map[j] = (axis == 1) ? ((N / 2 - j) % N + N) % N : (N - j) % N;
  } else {
    const int NP = w.n_phi, NT = w.n_theta;
    if (axis < 1 || axis > 3) throw UsageError("reflection_map: axis must be in {1,2,3} for n=4");
    for (int i = 0; i < NP; ++i)
      for (int j = 0; j < NT; ++j) {
        int ii = i, jj = j;
        if (axis == 1) jj = ((NT / 2 - j) % NT + NT) % NT;
        if (axis == 2) jj = (NT - j) % NT;
        if (axis == 3) ii = NP - 1 - i;
        map[i * NT + j] = ii * NT + jj;
      }
  }
  return map;
}

/// Parity of one sampled function under the axis reflection,
/// threshold 1e-6 relative asymmetry.
inline Parity parity_of(const std::vector<double>& u, const Weight& w, int axis, double rel_tol = 1e-6) {
  const auto map = reflection_map(w, axis);
  double norm = 0.0, odd_defect = 0.0, even_defect = 0.0;
  for (int i = 0; i < w.size(); ++i) {
    const double r = u[map[i]];
    norm = std::max(norm, std::abs(u[i]));
    odd_defect = std::max(odd_defect, std::abs(r + u[i]));
    even_defect = std::max(even_defect, std::abs(r - u[i]));
  }
  if (norm == 0.0) return Parity::Even;
  if (odd_defect <= rel_tol * norm) return Parity::Odd;
  if (even_defect <= rel_tol * norm) return Parity::Even;
  return Parity::Mixed;
}

struct ParityReport {
  int axis = 0;
  std::vector<Parity> tags;  // per column of functions
  Eigen::MatrixXd functions; // cluster-rotated basis with definite parity
  bool lambda1_contains_odd = false;
  int lambda1_odd_index = -1;
};

/// Tag each eigenfunction odd/even/mixed under xi_axis -> -xi_axis.
/// Within a degenerate cluster the returned basis is rotated so that each
/// function has definite parity when the reflection commutes with the
/// operator; reports whether the lambda1 eigenspace contains an odd function.
inline ParityReport classify_parity(const SpectralBasis& basis, int axis) {
  const Weight& w = basis.weight;
  const auto map = reflection_map(w, axis);
  double amax = 0.0, adef = 0.0;
  for (int i = 0; i < w.size(); ++i) {
    amax = std::max(amax, std::abs(w.samples[i]));
    adef = std::max(adef, std::abs(w.samples[i] - w.samples[map[i]]));
  }
  if (adef > 1e-12 * amax)
    throw InapplicableError("classify_parity: weight is not reflection-symmetric about this axis");

  const int k = static_cast<int>(basis.eigenvalues.size());
  ParityReport rep;
  rep.axis = axis;
  rep.functions = basis.eigenfunctions;
  rep.tags.assign(k, Parity::Mixed);

  for (const auto& c : basis.clusters) {
    // project the reflection into the eigenspace and diagonalize it
    Eigen::MatrixXd s(c.count, c.count);
    for (int a = 0; a < c.count; ++a) {
      std::vector<double> ra(w.size());
      for (int i = 0; i < w.size(); ++i) ra[i] = basis.eigenfunctions(map[i], c.first + a);
      for (int b = 0; b < c.count; ++b) {
        std::vector<double> yb(basis.eigenfunctions.col(c.first + b).data(),
                               basis.eigenfunctions.col(c.first + b).data() + w.size());
        s(a, b) = weighted_inner(ra, yb, w);
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (s + s.transpose()));
    Eigen::MatrixXd rot = basis.eigenfunctions.middleCols(c.first, c.count) * es.eigenvectors();
    rep.functions.middleCols(c.first, c.count) = rot;
    for (int a = 0; a < c.count; ++a) {
      std::vector<double> y(rot.col(a).data(), rot.col(a).data() + w.size());
      rep.tags[c.first + a] = parity_of(y, w, axis);
    }
  }

  for (const auto& c : basis.clusters) {
    if (basis.lambda1_index >= c.first && basis.lambda1_index < c.first + c.count) {
      for (int a = c.first; a < c.first + c.count; ++a) {
        if (rep.tags[a] == Parity::Odd) {
          rep.lambda1_contains_odd = true;
          rep.lambda1_odd_index = a;
          break;
        }
      }
    }
  }
  return rep;
}

} // namespace gaplab
