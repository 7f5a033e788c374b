#pragma once

#include "holostab/error.hpp"
#include "holostab/ichol.hpp"
#include "holostab/lsmr.hpp"
#include "holostab/rng.hpp"

#include <Eigen/Dense>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCore>
#include <Eigen/SparseQR>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace holostab {

enum class SolverMode { Dense, Iterative, Auto };
enum class PrecondKind { None, Ichol };

struct SolverConfig {
  SolverMode mode = SolverMode::Auto;
  double lsqr_tol = 1e-10;
  int max_iters = 200;        // outer inverse iterations
  int lsqr_max_iters = 0;     // 0: 4 * dim
  PrecondKind precond = PrecondKind::None;
  int dense_threshold = 400;
  double eig_tol = 1e-9;      // residual, relative to ||A||
  double shift_rel = 1e-8;    // inverse iteration shift, relative to ||A||
  double precond_shift_rel = 1e-3;  // diagonal added before ichol, times trace/dim
  int block_size = 2;
};

struct SpectralPoint {
  double value = 0.0;
  Eigen::VectorXd vector;
  double residual = 0.0;
  bool multiplicity_flag = false;
  double gap = std::numeric_limits<double>::infinity();
  int iterations = 0;
  int lsqr_iterations = 0;
  bool dense = false;
  Eigen::MatrixXd block;  // Ritz vectors, usable as a warm start
};

struct EigenHints {
  const Eigen::MatrixXd* kernel_basis = nullptr;  // orthonormal columns spanning the kernel
  const IcholFactor* precond = nullptr;
  const Eigen::MatrixXd* warm_start = nullptr;
  bool strict = true;  // throw KernelDimMismatch when the kernel is larger than declared
};

inline double norm_bound(const Eigen::SparseMatrix<double>& A) {
  // max absolute column sum, an upper bound on the spectral norm for symmetric A
  double best = 0;
  for (int k = 0; k < A.outerSize(); ++k) {
    double s = 0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it) s += std::abs(it.value());
    best = std::max(best, s);
  }
  return best;
}

inline constexpr double kZeroEigRel = 1e-10;
inline constexpr double kSimplicityRel = 1e-9;

// x minimizing ||A x - b||, optionally right-preconditioned by L^T from an ichol factor
inline LsmrResult lsqr_solve(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& b,
                             const IcholFactor* precond, double tol, int max_iters,
                             LsmrStop stop = LsmrStop::NormalResidual, bool throw_on_cap = true) {
  if (b.size() != A.rows()) throw Error(ErrorCode::InvalidArgument, "rhs size mismatch");
  LsmrResult r;
  if (!precond) {
    r = lsmr([&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return A * v; },
             [&](const Eigen::VectorXd& u) -> Eigen::VectorXd { return A.transpose() * u; }, b, A.cols(), tol,
             max_iters, stop);
  } else {
    r = lsmr([&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return A * precond->solve_upper(v); },
             [&](const Eigen::VectorXd& u) -> Eigen::VectorXd {
               return precond->solve_lower(A.transpose() * u);
             },
             b, A.cols(), tol, max_iters, stop);
    r.x = precond->solve_upper(r.x);
  }
  if (!r.converged && throw_on_cap) throw Error(ErrorCode::NoConvergence, "least-squares solve hit the iteration cap");
  return r;
}

namespace detail {

inline SpectralPoint dense_eig(const Eigen::SparseMatrix<double>& A, int kernel_dim, bool strict) {
  const int n = static_cast<int>(A.rows());
  if (kernel_dim >= n) throw Error(ErrorCode::KernelDimMismatch, "kernel fills the whole space");
  const Eigen::MatrixXd M(A);
  const double normA = std::max(norm_bound(A), std::numeric_limits<double>::min());
  int il = kernel_dim + 1, iu = std::min(kernel_dim + 2, n);
  std::vector<double> w(n);
  Eigen::MatrixXd Z(n, iu - il + 1);
  lapack_int found = 0;
  if (n == 1) {
    w[0] = M(0, 0);
    Z(0, 0) = 1.0;
    found = 1;
  } else {
    // reduction in Eigen, MRRR on the tridiagonal in LAPACK (no level-3 BLAS)
    Eigen::Tridiagonalization<Eigen::MatrixXd> tri(M);
    std::vector<double> d(n), e(n, 0.0);
    for (int i = 0; i < n; ++i) d[i] = tri.diagonal()(i);
    for (int i = 0; i + 1 < n; ++i) e[i] = tri.subDiagonal()(i);
    std::vector<lapack_int> isuppz(2 * Z.cols());
    lapack_logical tryrac = 1;
    lapack_int info = LAPACKE_dstemr(LAPACK_COL_MAJOR, 'V', 'I', n, d.data(), e.data(), 0.0, 0.0, il, iu, &found,
                                     w.data(), Z.data(), n, Z.cols(), isuppz.data(), &tryrac);
    if (info != 0 || found < 1) throw Error(ErrorCode::NoConvergence, "dense eigensolver failed");
    Z = (tri.matrixQ() * Z).eval();
  }
  SpectralPoint sp;
  sp.dense = true;
  sp.value = std::max(w[0], 0.0);
  sp.vector = Z.col(0).normalized();
  sp.block = Z.leftCols(found);
  sp.residual = (A * sp.vector - w[0] * sp.vector).norm();
  if (found > 1) sp.gap = w[1] - w[0];
  sp.multiplicity_flag = sp.gap < kSimplicityRel * normA;
  if (strict && w[0] < kZeroEigRel * normA)
    throw Error(ErrorCode::KernelDimMismatch, "kernel larger than declared");
  return sp;
}

inline void deflate(Eigen::MatrixXd& X, const Eigen::MatrixXd& Q) {
  if (Q.cols() == 0) return;
  X -= Q * (Q.transpose() * X);
  X -= Q * (Q.transpose() * X);
}

inline void orthonormalize(Eigen::MatrixXd& X) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(X);
  X = qr.householderQ() * Eigen::MatrixXd::Identity(X.rows(), X.cols());
}

// min ||P S P x - b|| with P the projector off span(Q); the kernel becomes an
// exact null space instead of a cluster of tiny singular values
inline LsmrResult projected_solve(const Eigen::SparseMatrix<double>& S, const Eigen::MatrixXd& Q,
                                  const Eigen::VectorXd& b, const IcholFactor* precond, double tol, int max_iters) {
  if (Q.cols() == 0) return lsqr_solve(S, b, precond, tol, max_iters, LsmrStop::NormalResidual, false);
  auto proj = [&](Eigen::VectorXd v) {
    v -= Q * (Q.transpose() * v);
    return v;
  };
  auto op = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return proj(S * proj(v)); };
  LsmrResult r;
  if (!precond) {
    r = lsmr(op, op, b, S.cols(), tol, max_iters, LsmrStop::NormalResidual);
  } else {
    r = lsmr([&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return op(precond->solve_upper(v)); },
             [&](const Eigen::VectorXd& u) -> Eigen::VectorXd { return precond->solve_lower(op(u)); }, b, S.cols(),
             tol, max_iters, LsmrStop::NormalResidual);
    r.x = precond->solve_upper(r.x);
  }
  return r;
}

struct BlockResult {
  Eigen::VectorXd theta;
  Eigen::MatrixXd X;
  double residual = 0;
  int iterations = 0;
  int lsqr_iterations = 0;
};

// Block inverse iteration on the complement of span(Q). Each application of
// (A + sigma I)^{-1} is an LSMR solve.
inline BlockResult block_inverse_iteration(const Eigen::SparseMatrix<double>& A, const Eigen::MatrixXd& Q,
                                           Eigen::MatrixXd X, const SolverConfig& cfg,
                                           const IcholFactor* precond, double normA) {
  const int n = static_cast<int>(A.rows());
  const double sigma = cfg.shift_rel * normA;
  Eigen::SparseMatrix<double> S = A;
  for (int i = 0; i < n; ++i) S.coeffRef(i, i) += sigma;
  S.makeCompressed();
  const int lmax = cfg.lsqr_max_iters > 0 ? cfg.lsqr_max_iters : 4 * n + 20;

  BlockResult br;
  deflate(X, Q);
  orthonormalize(X);
  for (int it = 1; it <= cfg.max_iters; ++it) {
    Eigen::MatrixXd Y(n, X.cols());
    for (int j = 0; j < X.cols(); ++j) {
      // inexact solves are fine here, Rayleigh-Ritz absorbs the error
      auto r = projected_solve(S, Q, X.col(j), precond, cfg.lsqr_tol, lmax);
      br.lsqr_iterations += r.iterations;
      Y.col(j) = r.x;
    }
    deflate(Y, Q);
    orthonormalize(Y);
    Eigen::MatrixXd AY = A * Y;
    Eigen::MatrixXd H = Y.transpose() * AY;
    H = 0.5 * (H + H.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    X = Y * es.eigenvectors();
    Eigen::MatrixXd AX = AY * es.eigenvectors();
    br.theta = es.eigenvalues();
    br.residual = (AX.col(0) - br.theta(0) * X.col(0)).norm();
    br.iterations = it;
    if (br.residual <= cfg.eig_tol * normA) {
      br.X = X;
      return br;
    }
  }
  throw Error(ErrorCode::NoConvergence, "inverse iteration hit the iteration cap");
}

// orthonormal kernel basis from a rank-revealing sparse QR, for small problems
inline Eigen::MatrixXd sparse_kernel(const Eigen::SparseMatrix<double>& A, double tol) {
  Eigen::SparseQR<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> qr;
  qr.setPivotThreshold(tol);
  qr.compute(A);
  if (qr.info() != Eigen::Success) throw Error(ErrorCode::NoConvergence, "sparse QR failed");
  const int n = static_cast<int>(A.rows()), r = static_cast<int>(qr.rank());
  Eigen::MatrixXd K(n, n - r);
  for (int j = 0; j < n - r; ++j) {
    Eigen::VectorXd q = qr.matrixQ() * Eigen::VectorXd::Unit(n, r + j);
    K.col(j) = q;
  }
  return K;
}

inline Eigen::MatrixXd start_block(int n, int p, const Eigen::MatrixXd* warm) {
  Eigen::MatrixXd X(n, p);
  CounterRng rng(0x5eed, static_cast<std::uint64_t>(n));
  for (int j = 0; j < p; ++j) {
    if (warm && j < warm->cols() && warm->rows() == n)
      X.col(j) = warm->col(j);
    else
      for (int i = 0; i < n; ++i) X(i, j) = rng.normal();
  }
  return X;
}

}  // namespace detail

// (kernel_dim+1)-th smallest eigenpair of a symmetric PSD matrix
inline SpectralPoint smallest_nonzero_eig(const Eigen::SparseMatrix<double>& A, int kernel_dim,
                                          const SolverConfig& cfg, const EigenHints& hints = {}) {
  const int n = static_cast<int>(A.rows());
  if (n == 0 || kernel_dim >= n) throw Error(ErrorCode::KernelDimMismatch, "no nonzero eigenvalue expected");
  bool dense = cfg.mode == SolverMode::Dense || (cfg.mode == SolverMode::Auto && n <= cfg.dense_threshold);
  if (dense) return detail::dense_eig(A, kernel_dim, hints.strict);

  const double normA = std::max(norm_bound(A), std::numeric_limits<double>::min());
  const int p = std::max(1, std::min(cfg.block_size, n - kernel_dim));
  SpectralPoint sp;
  Eigen::MatrixXd X = detail::start_block(n, p, hints.warm_start);

  detail::BlockResult br;
  if (hints.kernel_basis) {
    br = detail::block_inverse_iteration(A, *hints.kernel_basis, X, cfg, hints.precond, normA);
    if (hints.strict && br.theta(0) < kZeroEigRel * normA)
      throw Error(ErrorCode::KernelDimMismatch, "kernel larger than declared");
  } else {
    Eigen::MatrixXd Q = detail::sparse_kernel(A, kZeroEigRel * normA);
    if (Q.cols() > kernel_dim && hints.strict) throw Error(ErrorCode::KernelDimMismatch, "kernel larger than declared");
    if (Q.cols() >= n) throw Error(ErrorCode::KernelDimMismatch, "kernel fills the whole space");
    br = detail::block_inverse_iteration(A, Q, X, cfg, hints.precond, normA);
    if (hints.strict && br.theta(0) < kZeroEigRel * normA)
      throw Error(ErrorCode::KernelDimMismatch, "kernel larger than declared");
  }
  sp.value = std::max(br.theta(0), 0.0);
  sp.vector = br.X.col(0).normalized();
  sp.residual = br.residual;
  if (br.theta.size() > 1) sp.gap = br.theta(1) - br.theta(0);
  sp.multiplicity_flag = sp.gap < kSimplicityRel * normA;
  sp.iterations += br.iterations;
  sp.lsqr_iterations += br.lsqr_iterations;
  sp.block = br.X;
  return sp;
}

}  // namespace holostab
