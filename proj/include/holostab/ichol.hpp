#pragma once

#include "holostab/error.hpp"

#include <Eigen/SparseCore>

#include <cmath>
#include <vector>

namespace holostab {

struct IcholOptions {
  double initial_shift_rel = 1e-8;  // times trace(A)/dim
  double growth = 10.0;
  int max_retries = 3;
};

struct IcholFactor {
  Eigen::SparseMatrix<double> L;  // lower triangular, column major
  double shift = 0.0;
  int retries = 0;

  // z = L^{-T} v
  Eigen::VectorXd solve_upper(const Eigen::VectorXd& v) const {
    Eigen::VectorXd z = v;
    L.transpose().triangularView<Eigen::Upper>().solveInPlace(z);
    return z;
  }
  // z = L^{-1} v
  Eigen::VectorXd solve_lower(const Eigen::VectorXd& v) const {
    Eigen::VectorXd z = v;
    L.triangularView<Eigen::Lower>().solveInPlace(z);
    return z;
  }
};

namespace detail {

// IC(0) in place on the lower triangle; false on a non-positive pivot
inline bool ic0_inplace(Eigen::SparseMatrix<double>& L) {
  const int n = static_cast<int>(L.cols());
  std::vector<double> mark(n, 0.0);
  std::vector<char> has(n, 0);
  double* val = L.valuePtr();
  const int* inner = L.innerIndexPtr();
  const int* outer = L.outerIndexPtr();
  for (int k = 0; k < n; ++k) {
    int p0 = outer[k], p1 = outer[k + 1];
    if (p0 == p1 || inner[p0] != k) return false;  // missing diagonal
    double d = val[p0];
    if (!(d > 0) || !std::isfinite(d)) return false;
    double lkk = std::sqrt(d);
    val[p0] = lkk;
    for (int p = p0 + 1; p < p1; ++p) {
      val[p] /= lkk;
      mark[inner[p]] = val[p];
      has[inner[p]] = 1;
    }
    for (int p = p0 + 1; p < p1; ++p) {
      int j = inner[p];
      double ljk = val[p];
      for (int q = outer[j]; q < outer[j + 1]; ++q) {
        int r = inner[q];
        if (has[r]) val[q] -= mark[r] * ljk;
      }
    }
    for (int p = p0 + 1; p < p1; ++p) has[inner[p]] = 0;
  }
  return true;
}

}  // namespace detail

// Zero-fill incomplete Cholesky of A + shift*I. The shift grows on breakdown.
inline IcholFactor ichol_factor(const Eigen::SparseMatrix<double>& A, const IcholOptions& opt = {}) {
  const int n = static_cast<int>(A.rows());
  if (A.rows() != A.cols()) throw Error(ErrorCode::InvalidArgument, "ichol needs a square matrix");
  Eigen::SparseMatrix<double> lower = A.triangularView<Eigen::Lower>();
  // make sure every diagonal entry is structurally present
  Eigen::SparseMatrix<double> eye(n, n);
  eye.setIdentity();
  lower = lower + 0.0 * eye;
  lower.makeCompressed();
  double trace = 0;
  for (int i = 0; i < n; ++i) trace += A.coeff(i, i);
  double base = n > 0 ? trace / n : 0.0;
  double shift = opt.initial_shift_rel * base;

  for (int attempt = 0; attempt <= opt.max_retries; ++attempt) {
    IcholFactor f;
    f.L = lower;
    for (int i = 0; i < n; ++i) f.L.coeffRef(i, i) += shift;
    if (detail::ic0_inplace(f.L)) {
      f.shift = shift;
      f.retries = attempt;
      return f;
    }
    shift = shift > 0 ? shift * opt.growth : 1e-8 * (base > 0 ? base : 1.0);
  }
  throw Error(ErrorCode::BreakdownNegativePivot, "incomplete Cholesky failed after shift retries");
}

}  // namespace holostab
