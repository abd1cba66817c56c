#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "gaplab/errors.hpp"
#include "gaplab/log.hpp"

namespace gaplab {

enum class Definiteness { SPD, SPSD };

struct Triplet {
  int row;
  int col;
  double value;
};

/// Symmetric sparse matrix in CSR layout. Assembly goes through
/// from_triplets which sorts and merges duplicates in a fixed order,
/// so identical inputs produce identical matrices.
struct SparseSystem {
  int dim = 0;
  std::vector<int> row_ptr;
  std::vector<int> col;
  std::vector<double> val;
  Definiteness tag = Definiteness::SPD;

  static SparseSystem from_triplets(int dim, std::vector<Triplet> trips, Definiteness tag) {
    if (dim <= 0) throw UsageError("SparseSystem: dimension must be positive");
    for (const auto& t : trips)
      if (t.row < 0 || t.row >= dim || t.col < 0 || t.col >= dim)
        throw UsageError("SparseSystem: triplet index out of range");
    std::sort(trips.begin(), trips.end(), [](const Triplet& a, const Triplet& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    SparseSystem s;
    s.dim = dim;
    s.tag = tag;
    s.row_ptr.assign(dim + 1, 0);
    for (std::size_t i = 0; i < trips.size(); ++i) {
      if (i > 0 && trips[i].row == trips[i - 1].row && trips[i].col == trips[i - 1].col) {
        s.val.back() += trips[i].value;
      } else {
        s.col.push_back(trips[i].col);
        s.val.push_back(trips[i].value);
        ++s.row_ptr[trips[i].row + 1];
      }
    }
    for (int r = 0; r < dim; ++r) s.row_ptr[r + 1] += s.row_ptr[r];
    return s;
  }

  // y = A x, fixed accumulation order
  void multiply(const double* x, double* y) const {
    for (int i = 0; i < dim; ++i) {
      double s = 0.0;
      for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += val[k] * x[col[k]];
      y[i] = s;
    }
  }

  std::vector<double> multiply(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != dim) throw UsageError("SparseSystem::multiply: dimension mismatch");
    std::vector<double> y(dim);
    multiply(x.data(), y.data());
    return y;
  }

  std::vector<double> diagonal() const {
    std::vector<double> d(dim, 0.0);
    for (int i = 0; i < dim; ++i)
      for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
        if (col[k] == i) d[i] = val[k];
    return d;
  }

  double trace() const {
    double t = 0.0;
    for (double d : diagonal()) t += d;
    return t;
  }

  /// Max absolute asymmetry |A - A^T|; exact assembly keeps this at zero.
  double symmetry_defect() const {
    Eigen::SparseMatrix<double> a = to_eigen();
    Eigen::SparseMatrix<double> d = Eigen::SparseMatrix<double>(a.transpose()) - a;
    double m = 0.0;
    for (int k = 0; k < d.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(d, k); it; ++it) m = std::max(m, std::abs(it.value()));
    return m;
  }

  Eigen::SparseMatrix<double> to_eigen() const {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(val.size());
    for (int i = 0; i < dim; ++i)
      for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) t.emplace_back(i, col[k], val[k]);
    Eigen::SparseMatrix<double> m(dim, dim);
    m.setFromTriplets(t.begin(), t.end());
    return m;
  }

  Eigen::MatrixXd to_dense() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) m(i, col[k]) = val[k];
    return m;
  }
};

struct CgStats {
  int iterations = 0;
  double residual = 0.0; // relative, true residual at exit
};

/// Jacobi-preconditioned conjugate gradients on an SPD system.
/// Iteration order is fixed, so the result is deterministic for given inputs.
/// Convergence is declared on the true relative residual ||b-Ax||/||b||.
inline std::vector<double> cg_solve(const SparseSystem& A, const std::vector<double>& b, double tol,
                                    int max_iterations = 0, CgStats* stats = nullptr) {
  if (A.tag != Definiteness::SPD) throw UsageError("cg_solve: system must be tagged SPD");
  if (static_cast<int>(b.size()) != A.dim) throw UsageError("cg_solve: rhs dimension mismatch");
  if (!(tol > 0.0)) throw UsageError("cg_solve: tolerance must be positive");
  const int n = A.dim;
  if (max_iterations <= 0) max_iterations = std::max(1000, 20 * n);

  std::vector<double> dinv = A.diagonal();
  for (int i = 0; i < n; ++i) {
    if (!(dinv[i] > 0.0)) throw UsageError("cg_solve: SPD system must have strictly positive diagonal");
    dinv[i] = 1.0 / dinv[i];
  }

  double bnorm = 0.0;
  for (double v : b) bnorm += v * v;
  bnorm = std::sqrt(bnorm);
  std::vector<double> x(n, 0.0);
  if (bnorm == 0.0) {
    if (stats) *stats = {0, 0.0};
    return x;
  }

  std::vector<double> r = b, z(n), p(n), Ap(n);
  for (int i = 0; i < n; ++i) z[i] = dinv[i] * r[i];
  p = z;
  double rz = 0.0;
  for (int i = 0; i < n; ++i) rz += r[i] * z[i];

  double rel = 1.0;
  for (int it = 1; it <= max_iterations; ++it) {
    A.multiply(p.data(), Ap.data());
    double pAp = 0.0;
    for (int i = 0; i < n; ++i) pAp += p[i] * Ap[i];
    if (!(pAp > 0.0))
      throw NumericalError("cg_solve: direction with non-positive curvature (system not SPD?)", rel);
    const double alpha = rz / pAp;
    double rn = 0.0;
    for (int i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
      rn += r[i] * r[i];
    }
    if (std::sqrt(rn) <= tol * bnorm) {
      // recurrence residual can drift; confirm with the true one
      A.multiply(x.data(), Ap.data());
      double tn = 0.0;
      for (int i = 0; i < n; ++i) {
        const double d = b[i] - Ap[i];
        tn += d * d;
      }
      rel = std::sqrt(tn) / bnorm;
      if (rel <= tol) {
        if (stats) *stats = {it, rel};
        return x;
      }
      for (int i = 0; i < n; ++i) r[i] = b[i] - Ap[i];
      rn = tn;
    }
    double rz2 = 0.0;
    for (int i = 0; i < n; ++i) {
      z[i] = dinv[i] * r[i];
      rz2 += r[i] * z[i];
    }
    const double beta = rz2 / rz;
    rz = rz2;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    rel = std::sqrt(rn) / bnorm;
  }
  throw NumericalError("cg_solve: no convergence after " + std::to_string(max_iterations) +
                           " iterations, relative residual " + std::to_string(rel),
                       rel);
}

struct EigenProblemPair {
  SparseSystem stiffness; // SPSD
  SparseSystem mass;      // SPD

  void validate() const {
    if (stiffness.dim != mass.dim) throw UsageError("EigenProblemPair: dimension mismatch");
    if (mass.tag != Definiteness::SPD) throw UsageError("EigenProblemPair: mass matrix must be SPD");
    for (double d : mass.diagonal())
      if (!(d > 0.0)) throw UsageError("EigenProblemPair: mass diagonal must be positive");
  }
};

struct GenEigResult {
  std::vector<double> eigenvalues; // ascending
  Eigen::MatrixXd vectors;         // dim x k, mass-orthonormal columns
};

struct EigOptions {
  int dense_threshold = 1024;  // dense reduction below, shift-invert subspace above
  double residual_tol = 1e-8;  // per-pair contract ||Ky - lambda My|| <= tol * scale
  int max_iterations = 400;    // subspace iterations
  int subspace_extra = 8;
};

namespace detail {

// splitmix64; deterministic start vectors for the subspace iteration
inline double lcg_unit(std::uint64_t& s) {
  s += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  z = z ^ (z >> 31);
  return static_cast<double>(z >> 11) * (1.0 / 9007199254740992.0) - 0.5;
}

inline void canonical_sign(Eigen::MatrixXd& y) {
  for (int j = 0; j < y.cols(); ++j) {
    int arg = 0;
    double best = -1.0;
    for (int i = 0; i < y.rows(); ++i) {
      const double a = std::abs(y(i, j));
      if (a > best + 1e-300 && a > best) {
        best = a;
        arg = i;
      }
    }
    if (y(arg, j) < 0.0) y.col(j) = -y.col(j);
  }
}

inline void check_pairs(const SparseSystem& K, const SparseSystem& M, const GenEigResult& r, double tol) {
  const int k = static_cast<int>(r.eigenvalues.size());
  double lam_scale = 0.0;
  for (double l : r.eigenvalues) lam_scale = std::max(lam_scale, std::abs(l));
  for (int j = 0; j < k; ++j) {
    std::vector<double> y(r.vectors.col(j).data(), r.vectors.col(j).data() + K.dim);
    std::vector<double> Ky = K.multiply(y);
    std::vector<double> My = M.multiply(y);
    double rn = 0.0, kn = 0.0, mn = 0.0;
    for (int i = 0; i < K.dim; ++i) {
      const double d = Ky[i] - r.eigenvalues[j] * My[i];
      rn += d * d;
      kn += Ky[i] * Ky[i];
      mn += My[i] * My[i];
    }
    const double denom = std::max(std::sqrt(kn), lam_scale * std::sqrt(mn));
    if (denom > 0.0 && std::sqrt(rn) > tol * denom)
      throw NumericalError("sym_gen_eig: eigenpair residual " + std::to_string(std::sqrt(rn) / denom) +
                               " above tolerance for pair " + std::to_string(j),
                           std::sqrt(rn) / denom);
  }
  // mass-orthonormality
  Eigen::MatrixXd g = r.vectors.transpose() * (M.to_eigen() * r.vectors);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      const double want = (i == j) ? 1.0 : 0.0;
      if (std::abs(g(i, j) - want) > 1e-10)
        throw NumericalError("sym_gen_eig: eigenvectors not mass-orthonormal", std::abs(g(i, j) - want));
    }
}

inline GenEigResult dense_gen_eig(const SparseSystem& K, const SparseSystem& M, int k) {
  Eigen::MatrixXd Kd = K.to_dense();
  Eigen::MatrixXd Md = M.to_dense();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(Kd, Md);
  if (ges.info() != Eigen::Success) throw NumericalError("sym_gen_eig: dense eigensolve failed");
  GenEigResult r;
  r.eigenvalues.assign(ges.eigenvalues().data(), ges.eigenvalues().data() + k);
  r.vectors = ges.eigenvectors().leftCols(k);
  return r;
}

// Shift-invert subspace iteration with Rayleigh-Ritz projection.
// Factorizes K + sigma*M once with a bootstrap shift to learn the eigenvalue
// scale, then refactorizes with sigma of the order of the wanted eigenvalues.
inline GenEigResult subspace_gen_eig(const SparseSystem& Ks, const SparseSystem& Ms, int k, const EigOptions& opt) {
  const int n = Ks.dim;
  const int p = std::min(n, std::max(2 * k, k + opt.subspace_extra));
  Eigen::SparseMatrix<double> K = Ks.to_eigen();
  Eigen::SparseMatrix<double> M = Ms.to_eigen();

  const double tr_ratio = std::max(Ks.trace(), 0.0) / Ms.trace();
  double sigma = std::max(1e-4 * tr_ratio, 1e-300);

  Eigen::MatrixXd X(n, p);
  std::uint64_t seed = 0x1234ABCD5678EFull;
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < n; ++i) X(i, j) = lcg_unit(seed);

  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt;
  auto factorize = [&](double s) {
    Eigen::SparseMatrix<double> A = K + s * M;
    llt.compute(A);
    if (llt.info() != Eigen::Success)
      throw NumericalError("sym_gen_eig: sparse Cholesky of shifted operator failed");
  };
  factorize(sigma);

  Eigen::VectorXd lam = Eigen::VectorXd::Zero(p);
  bool reshifted = false;
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    X = llt.solve(M * X);
    Eigen::MatrixXd KX = K * X;
    Eigen::MatrixXd MX = M * X;
    Eigen::MatrixXd Kp = X.transpose() * KX;
    Eigen::MatrixXd Mp = X.transpose() * MX;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(0.5 * (Kp + Kp.transpose()),
                                                                  0.5 * (Mp + Mp.transpose()));
    if (ges.info() != Eigen::Success) throw NumericalError("sym_gen_eig: Rayleigh-Ritz projection failed");
    X = X * ges.eigenvectors();
    lam = ges.eigenvalues();

    if (!reshifted && it >= 1) {
      // re-center the shift on the scale of the wanted eigenvalues
      double scale = std::abs(lam(std::min(k - 1, p - 1)));
      if (scale > 0.0 && (scale < 0.02 * sigma || scale > 50.0 * sigma)) {
        sigma = 0.5 * scale;
        factorize(sigma);
      }
      reshifted = true;
      continue;
    }

    // residual-based stop on the wanted pairs
    KX = K * X.leftCols(k);
    MX = M * X.leftCols(k);
    double lam_scale = 0.0;
    for (int j = 0; j < k; ++j) lam_scale = std::max(lam_scale, std::abs(lam(j)));
    bool done = true;
    for (int j = 0; j < k && done; ++j) {
      const double rn = (KX.col(j) - lam(j) * MX.col(j)).norm();
      const double denom = std::max(KX.col(j).norm(), lam_scale * MX.col(j).norm());
      if (denom > 0.0 && rn > 0.1 * opt.residual_tol * denom) done = false;
    }
    if (done) break;
  }
  log::debug("subspace eigensolve: n=%d k=%d iterations=%d sigma=%.3e", n, k, it + 1, sigma);

  GenEigResult r;
  r.eigenvalues.assign(lam.data(), lam.data() + k);
  r.vectors = X.leftCols(k);
  return r;
}

} // namespace detail

/// Smallest-k eigenpairs of K y = lambda M y for symmetric K (SPSD) and SPD M.
/// Reduction through a symmetric factorization of the mass matrix: dense
/// Cholesky below dense_threshold, sparse shift-invert subspace iteration
/// above. Eigenvalues ascend; vectors are mass-orthonormal. Each returned
/// pair is verified against the residual contract.
inline GenEigResult sym_gen_eig(const EigenProblemPair& pair, int k, const EigOptions& opt = {}) {
  pair.validate();
  const int n = pair.stiffness.dim;
  if (k < 1 || k > n) throw UsageError("sym_gen_eig: k must be in [1, dimension]");

  GenEigResult r = (n <= opt.dense_threshold) ? detail::dense_gen_eig(pair.stiffness, pair.mass, k)
                                              : detail::subspace_gen_eig(pair.stiffness, pair.mass, k, opt);
  detail::canonical_sign(r.vectors);
  detail::check_pairs(pair.stiffness, pair.mass, r, opt.residual_tol);
  return r;
}

} // namespace gaplab
