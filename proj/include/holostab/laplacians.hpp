#pragma once

#include "holostab/complex.hpp"
#include "holostab/format.hpp"
#include "holostab/weights.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

namespace holostab {

struct LaplacianBundle {
  Eigen::SparseMatrix<double> B1_bar;  // n x m
  Eigen::SparseMatrix<double> B2_bar;  // m x T
  Eigen::SparseMatrix<double> L0;
  Eigen::SparseMatrix<double> L1_up;
  Eigen::SparseMatrix<double> L1_down;
  PerturbedWeights weights;
};

// Entry of B2_bar for face slot k of triangle t without the sign.
// Faces attaining the min ratio use sqrt(w2/w1), which is the value of
// sqrt(w2_tilde/w1_tilde) along the path and stays finite when w1_tilde -> 0.
inline double b2_scale(const SimplicialComplex& c, const PerturbedWeights& pw, int t, int k) {
  int e = c.triangle_faces(t)[k];
  if (pw.argmin_edge[t] >= 0 && (pw.tied_mask[t] >> k & 1u)) return std::sqrt(pw.w2(t) / pw.w1(e));
  if (pw.w1_tilde(e) <= 0.0) return 0.0;
  return std::sqrt(pw.w2_tilde(t) / pw.w1_tilde(e));
}

inline LaplacianBundle assemble(const SimplicialComplex& c, const PerturbedWeights& pw) {
  const int n = c.num_vertices(), m = c.num_edges(), T = c.num_triangles();
  for (int i = 0; i < n; ++i)
    if (!(pw.w0_tilde(i) > 0)) throw Error(ErrorCode::NonPositiveVertexWeight, "vertex weight");

  LaplacianBundle b;
  b.weights = pw;
  std::vector<Eigen::Triplet<double>> t1;
  t1.reserve(2 * m);
  for (int e = 0; e < m; ++e) {
    double s = std::sqrt(pw.w1_tilde(e));
    if (s == 0.0) continue;
    int i = c.edges()[e][0], j = c.edges()[e][1];
    t1.emplace_back(i, e, -s / std::sqrt(pw.w0_tilde(i)));
    t1.emplace_back(j, e, s / std::sqrt(pw.w0_tilde(j)));
  }
  b.B1_bar.resize(n, m);
  b.B1_bar.setFromTriplets(t1.begin(), t1.end());

  std::vector<Eigen::Triplet<double>> t2;
  t2.reserve(3 * T);
  auto sg = SimplicialComplex::face_signs();
  for (int t = 0; t < T; ++t)
    for (int k = 0; k < 3; ++k) {
      double v = b2_scale(c, pw, t, k);
      if (v != 0.0) t2.emplace_back(c.triangle_faces(t)[k], t, sg[k] * v);
    }
  b.B2_bar.resize(m, T);
  b.B2_bar.setFromTriplets(t2.begin(), t2.end());

  b.L0 = (b.B1_bar * b.B1_bar.transpose()).pruned();
  b.L1_up = (b.B2_bar * b.B2_bar.transpose()).pruned();
  b.L1_down = (b.B1_bar.transpose() * b.B1_bar).pruned();
  return b;
}

// number of eigenvalues of L1_down + L1_up below tol
inline int betti_weighted(const LaplacianBundle& b, double tol = 1e-10) {
  Eigen::MatrixXd L = Eigen::MatrixXd(b.L1_down) + Eigen::MatrixXd(b.L1_up);
  if (L.rows() == 0) return 0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L, Eigen::EigenvaluesOnly);
  int k = 0;
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) < tol) ++k;
  return k;
}

template <typename Scalar>
void write_matrix_market(const std::string& path, const Eigen::SparseMatrix<Scalar>& A) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << A.rows() << ' ' << A.cols() << ' ' << A.nonZeros() << '\n';
  for (int k = 0; k < A.outerSize(); ++k)
    for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(A, k); it; ++it)
      out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << format_double(static_cast<double>(it.value())) << '\n';
}

inline void export_bundle(const std::string& prefix, const LaplacianBundle& b) {
  write_matrix_market(prefix + "_B1bar.mtx", b.B1_bar);
  write_matrix_market(prefix + "_B2bar.mtx", b.B2_bar);
  write_matrix_market(prefix + "_L0.mtx", b.L0);
  write_matrix_market(prefix + "_L1up.mtx", b.L1_up);
  write_matrix_market(prefix + "_L1down.mtx", b.L1_down);
}

}  // namespace holostab
