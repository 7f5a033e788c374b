#pragma once

#include "holostab/complex.hpp"
#include "holostab/weights.hpp"

#include <Eigen/Dense>

#include <vector>

namespace holostab {

// Orthonormal basis of ker(B2^T) for unit weights, computed once per complex.
inline Eigen::MatrixXd up_null_basis(const SimplicialComplex& c, int rank_b2) {
  const int m = c.num_edges();
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m, std::max(c.num_triangles(), 1));
  auto sg = SimplicialComplex::face_signs();
  for (int t = 0; t < c.num_triangles(); ++t)
    for (int k = 0; k < 3; ++k) B(c.triangle_faces(t)[k], t) = sg[k];
  Eigen::BDCSVD<Eigen::MatrixXd> svd(B, Eigen::ComputeFullU);
  return svd.matrixU().rightCols(m - rank_b2);
}

// Kernel of the weighted L1_up. Live part is diag(sqrt(w1_tilde)) N; when edges
// are dead the lost directions are replaced by their limits diag(sqrt(w1)) N
// restricted to the dead edges.
inline Eigen::MatrixXd up_kernel_basis(const Eigen::MatrixXd& N, const PerturbedWeights& pw) {
  const int m = static_cast<int>(N.rows()), k = static_cast<int>(N.cols());
  Eigen::VectorXd d = pw.w1_tilde.cwiseSqrt();
  bool any_dead = false;
  for (int e = 0; e < m; ++e) any_dead |= !pw.live(e);
  Eigen::MatrixXd K = d.asDiagonal() * N;
  if (!any_dead) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(K);
    return qr.householderQ() * Eigen::MatrixXd::Identity(m, k);
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(K, Eigen::ComputeThinU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  int r = 0;
  while (r < s.size() && s(r) > 1e-10 * std::max(s(0), 1e-300)) ++r;
  Eigen::MatrixXd Q(m, k);
  Q.leftCols(r) = svd.matrixU().leftCols(r);
  if (r < k) {
    Eigen::MatrixXd C = svd.matrixV().rightCols(k - r);
    Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(m, k - r);
    for (int e = 0; e < m; ++e)
      if (!pw.live(e)) Z.row(e) = std::sqrt(pw.w1(e)) * (N.row(e) * C);
    Q.rightCols(k - r) = Z;
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Q);
  return qr.householderQ() * Eigen::MatrixXd::Identity(m, k);
}

// Kernel of the weighted L0 for the components of the unperturbed graph.
inline Eigen::MatrixXd l0_kernel_basis(const std::vector<int>& comp, int ncomp, const PerturbedWeights& pw) {
  const int n = static_cast<int>(comp.size());
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, ncomp);
  for (int v = 0; v < n; ++v) Q(v, comp[v]) = std::sqrt(pw.w0_tilde(v));
  for (int j = 0; j < ncomp; ++j) Q.col(j).normalize();
  return Q;
}

}  // namespace holostab
