#pragma once

#include "holostab/complex.hpp"
#include "holostab/error.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cmath>
#include <cstdint>
#include <vector>

namespace holostab {

enum class CouplingRule { MinRatio };

struct WeightProfile {
  Eigen::VectorXd w1;       // per edge, > 0
  Eigen::VectorXd w2_init;  // per triangle, > 0
  double rho = 1.0;
  CouplingRule coupling = CouplingRule::MinRatio;

  static WeightProfile uniform(const SimplicialComplex& c, double w = 1.0, double rho = 1.0) {
    WeightProfile p;
    p.w1 = Eigen::VectorXd::Constant(c.num_edges(), w);
    p.w2_init = Eigen::VectorXd::Ones(c.num_triangles());
    p.rho = rho;
    return p;
  }

  void validate(const SimplicialComplex& c) const {
    if (w1.size() != c.num_edges()) throw Error(ErrorCode::InvalidArgument, "edge weight count mismatch");
    if (w2_init.size() != c.num_triangles())
      throw Error(ErrorCode::InvalidArgument, "triangle weight count mismatch");
    if (!(rho > 0)) throw Error(ErrorCode::NonPositiveVertexWeight, "rho must be positive");
    for (int e = 0; e < w1.size(); ++e)
      if (!(w1(e) > 0) || !std::isfinite(w1(e)))
        throw Error(ErrorCode::NegativeWeight, "initial edge weights must be positive");
    for (int t = 0; t < w2_init.size(); ++t)
      if (!(w2_init(t) > 0) || !std::isfinite(w2_init(t)))
        throw Error(ErrorCode::NegativeWeight, "initial triangle weights must be positive");
  }
};

struct Perturbation {
  Eigen::VectorXd values;

  Perturbation() = default;
  explicit Perturbation(Eigen::VectorXd v) : values(std::move(v)) {}
  static Perturbation zero(int m) { return Perturbation(Eigen::VectorXd::Zero(m)); }
  double norm() const { return values.norm(); }
  int size() const { return static_cast<int>(values.size()); }
};

// below this an edge counts as removed in the P+ support
inline constexpr double kSupportTol = 1e-12;

struct PerturbedWeights {
  Eigen::VectorXd w1;  // unperturbed copies
  Eigen::VectorXd w2;
  Eigen::VectorXd w1_tilde;
  Eigen::VectorXd w0_tilde;
  Eigen::VectorXd w2_tilde;
  Eigen::VectorXd u;          // relative change per edge
  Eigen::VectorXd tri_ratio;  // min(1, min_e w1_tilde/w1) per triangle
  std::vector<int> argmin_edge;         // tie-broken argmin when the min is <= 1, else -1
  std::vector<std::uint8_t> tied_mask;  // faces (in triangle_faces order) attaining the min
  double rho = 1.0;

  bool live(int e) const { return w1_tilde(e) > kSupportTol; }
};

inline PerturbedWeights perturb(const SimplicialComplex& c, const WeightProfile& p, double eps,
                                const Perturbation& E) {
  const int m = c.num_edges(), n = c.num_vertices(), T = c.num_triangles();
  if (E.size() != m) throw Error(ErrorCode::InvalidArgument, "perturbation size mismatch");
  if (eps < 0) throw Error(ErrorCode::InvalidArgument, "eps must be non-negative");
  if (E.norm() > 1.0 + 1e-9) throw Error(ErrorCode::InvalidArgument, "perturbation norm exceeds 1");

  PerturbedWeights pw;
  pw.w1 = p.w1;
  pw.w2 = p.w2_init;
  pw.rho = p.rho;
  pw.w1_tilde.resize(m);
  pw.u.resize(m);
  for (int e = 0; e < m; ++e) {
    double v = p.w1(e) + eps * E.values(e);
    if (v < -1e-9 * p.w1(e)) throw Error(ErrorCode::NegativeWeight, "edge weight below zero");
    if (v <= kSupportTol) v = 0.0;
    pw.w1_tilde(e) = v;
    pw.u(e) = v / p.w1(e) - 1.0;
  }
  pw.w0_tilde = Eigen::VectorXd::Constant(n, p.rho);
  for (int e = 0; e < m; ++e) {
    pw.w0_tilde(c.edges()[e][0]) += pw.w1_tilde(e);
    pw.w0_tilde(c.edges()[e][1]) += pw.w1_tilde(e);
  }
  pw.w2_tilde.resize(T);
  pw.tri_ratio.resize(T);
  pw.argmin_edge.assign(T, -1);
  pw.tied_mask.assign(T, 0);
  for (int t = 0; t < T; ++t) {
    const auto& f = c.triangle_faces(t);
    double r[3];
    for (int k = 0; k < 3; ++k) r[k] = pw.w1_tilde(f[k]) / p.w1(f[k]);
    double mn = std::min({r[0], r[1], r[2]});
    if (mn <= 1.0) {
      int best = -1;
      for (int k = 0; k < 3; ++k)
        if (r[k] == mn) {
          pw.tied_mask[t] |= std::uint8_t(1u << k);
          if (best < 0 || f[k] < best) best = f[k];
        }
      pw.argmin_edge[t] = best;
    }
    pw.tri_ratio(t) = std::min(1.0, mn);
    pw.w2_tilde(t) = p.w2_init(t) * pw.tri_ratio(t);
  }
  return pw;
}

struct WeightJacobians {
  Eigen::SparseMatrix<double> J10;  // m x n
  Eigen::SparseMatrix<double> J12;  // m x T
};

inline WeightJacobians weight_jacobians(const SimplicialComplex& c, const WeightProfile& p,
                                        const PerturbedWeights& pw) {
  WeightJacobians j;
  j.J10.resize(c.num_edges(), c.num_vertices());
  std::vector<Eigen::Triplet<double>> a;
  for (int e = 0; e < c.num_edges(); ++e) {
    a.emplace_back(e, c.edges()[e][0], 1.0);
    a.emplace_back(e, c.edges()[e][1], 1.0);
  }
  j.J10.setFromTriplets(a.begin(), a.end());

  j.J12.resize(c.num_edges(), c.num_triangles());
  std::vector<Eigen::Triplet<double>> b;
  for (int t = 0; t < c.num_triangles(); ++t) {
    int e = pw.argmin_edge[t];
    if (e >= 0) b.emplace_back(e, t, p.w2_init(t) / p.w1(e));
  }
  j.J12.setFromTriplets(b.begin(), b.end());
  return j;
}

}  // namespace holostab
