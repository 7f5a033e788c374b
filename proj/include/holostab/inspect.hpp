#pragma once

#include "holostab/complex.hpp"
#include "holostab/io.hpp"
#include "holostab/laplacians.hpp"
#include "holostab/spectral.hpp"
#include "holostab/weights.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace holostab {

struct ComplexSummary {
  int n = 0, m = 0, triangles = 0;
  int b0 = 0, b1 = 0;
  double mu2 = 0;           // 0 when the graph has no edges
  double lambda_plus = 0;   // 0 when there are no triangles
  double inheritance_residual = 0;
};

// max relative mismatch between the positive spectra of L0 and L1_down, and
// residual of the transported eigenvectors B1^T v / sqrt(mu)
inline double inheritance_residual(const LaplacianBundle& b) {
  if (b.B1_bar.rows() == 0 || b.B1_bar.cols() == 0) return 0.0;
  Eigen::MatrixXd B = b.B1_bar;
  Eigen::MatrixXd L0 = B * B.transpose(), Ld = B.transpose() * B;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e0(L0), ed(Ld, Eigen::EigenvaluesOnly);
  const double scale = std::max(1.0, e0.eigenvalues().cwiseAbs().maxCoeff());
  const double tol = 1e-10 * scale;
  std::vector<double> p0, pd;
  for (int i = 0; i < e0.eigenvalues().size(); ++i)
    if (e0.eigenvalues()(i) > tol) p0.push_back(e0.eigenvalues()(i));
  for (int i = 0; i < ed.eigenvalues().size(); ++i)
    if (ed.eigenvalues()(i) > tol) pd.push_back(ed.eigenvalues()(i));
  if (p0.size() != pd.size()) return std::numeric_limits<double>::infinity();
  double worst = 0;
  for (std::size_t k = 0; k < p0.size(); ++k) worst = std::max(worst, std::abs(p0[k] - pd[k]) / p0[k]);
  for (int i = 0; i < e0.eigenvalues().size(); ++i) {
    double mu = e0.eigenvalues()(i);
    if (mu <= tol) continue;
    Eigen::VectorXd u = B.transpose() * e0.eigenvectors().col(i) / std::sqrt(mu);
    worst = std::max(worst, (Ld * u - mu * u).norm() / mu);
  }
  return worst;
}

inline ComplexSummary summarize(const SimplicialComplex& c, const WeightProfile& p) {
  ComplexSummary s;
  s.n = c.num_vertices();
  s.m = c.num_edges();
  s.triangles = c.num_triangles();
  if (s.n == 0) return s;
  auto betti = betti_numbers(c);
  s.b0 = betti.b0;
  s.b1 = betti.b1;
  auto b = assemble(c, perturb(c, p, 0.0, Perturbation::zero(s.m)));
  SolverConfig dense;
  dense.mode = SolverMode::Dense;
  EigenHints loose;
  loose.strict = false;
  if (s.m > 0 && s.b0 < s.n) s.mu2 = smallest_nonzero_eig(b.L0, s.b0, dense, loose).value;
  if (s.triangles > 0) s.lambda_plus = smallest_nonzero_eig(b.L1_up, s.m - betti.rank_b2, dense, loose).value;
  s.inheritance_residual = inheritance_residual(b);
  return s;
}

inline Json to_json(const ComplexSummary& s) {
  Json j;
  j["n"] = s.n;
  j["m"] = s.m;
  j["triangles"] = s.triangles;
  j["beta0"] = s.b0;
  j["beta1"] = s.b1;
  j["mu2"] = s.mu2;
  j["lambda_plus"] = s.lambda_plus;
  j["inheritance_residual"] = s.inheritance_residual;
  return j;
}

}  // namespace holostab
