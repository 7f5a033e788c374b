#pragma once

#include "holostab/complex.hpp"
#include "holostab/error.hpp"
#include "holostab/laplacians.hpp"
#include "holostab/spectral.hpp"
#include "holostab/weights.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <vector>

namespace holostab {

struct FunctionalParams {
  double alpha = 1.0;
  double mu_bar = 1.0;
};

struct GradientInfo {
  Eigen::VectorXd G;            // d F / d E
  Eigen::VectorXd G_projected;  // P+ G
  double kappa = 0.0;
  std::vector<int> active_set;  // edges zeroed by P+
  std::vector<char> support;    // 1 where P+ keeps the entry
  bool degenerate = false;      // an eigenvalue was flagged as multiple
};

// max(0, 1 - mu2/mu_bar)
inline double penalty_slack(double mu2, const FunctionalParams& p) {
  return std::max(0.0, 1.0 - mu2 / p.mu_bar);
}

inline double eval_functional(double lambda_plus, double mu2, const FunctionalParams& p) {
  double s = penalty_slack(mu2, p);
  return 0.5 * lambda_plus * lambda_plus + 0.5 * p.alpha * s * s;
}

inline double eval_functional(const LaplacianBundle&, const SpectralPoint& sp_lambda, const SpectralPoint& sp_mu,
                              const FunctionalParams& p) {
  return eval_functional(sp_lambda.value, sp_mu.value, p);
}

// d lambda_plus / d w1_tilde, for the unit eigenvector x of L1_up
inline Eigen::VectorXd lambda_derivative(const SimplicialComplex& c, const PerturbedWeights& pw,
                                         const WeightJacobians& jac, const Eigen::VectorXd& x) {
  const int m = c.num_edges();
  Eigen::VectorXd d = Eigen::VectorXd::Zero(m);
  auto sg = SimplicialComplex::face_signs();
  for (int t = 0; t < c.num_triangles(); ++t) {
    const auto& f = c.triangle_faces(t);
    double g[3];
    double ct = 0;
    for (int k = 0; k < 3; ++k) {
      g[k] = b2_scale(c, pw, t, k);
      ct += sg[k] * g[k] * x(f[k]);
    }
    if (ct == 0.0) continue;
    const int star = pw.argmin_edge[t];
    const double j12 = star >= 0 ? jac.J12.coeff(star, t) : 0.0;
    for (int k = 0; k < 3; ++k) {
      const int e = f[k];
      if (e == star) continue;  // sqrt(w2/w1) is constant along the min edge
      const double a = pw.w1_tilde(e);
      if (g[k] == 0.0 || a <= 0.0) continue;
      const double coef = 2.0 * ct * sg[k] * x(e);
      d(e) += coef * (-g[k] / (2.0 * a));
      if (star >= 0) d(star) += coef * (j12 / a) / (2.0 * g[k]);
    }
  }
  return d;
}

// One-sided d lambda_plus / d w1_tilde at ties of the min ratio. down(e) is the
// rate when only w1_tilde(e) decreases (e becomes the argmin of its tied
// triangles), up(e) when it increases (e leaves the argmin).
struct OneSided {
  Eigen::VectorXd down, up;
};

inline OneSided lambda_derivative_one_sided(const SimplicialComplex& c, const PerturbedWeights& pw,
                                            const Eigen::VectorXd& x) {
  const int m = c.num_edges();
  OneSided d{Eigen::VectorXd::Zero(m), Eigen::VectorXd::Zero(m)};
  auto sg = SimplicialComplex::face_signs();
  for (int t = 0; t < c.num_triangles(); ++t) {
    const auto& f = c.triangle_faces(t);
    double g[3], coef[3];
    double ct = 0;
    for (int k = 0; k < 3; ++k) {
      g[k] = b2_scale(c, pw, t, k);
      ct += sg[k] * g[k] * x(f[k]);
    }
    if (ct == 0.0) continue;
    for (int k = 0; k < 3; ++k) coef[k] = 2.0 * ct * sg[k] * x(f[k]);
    const bool has_min = pw.argmin_edge[t] >= 0;
    const int ntied = has_min ? std::popcount(static_cast<unsigned>(pw.tied_mask[t])) : 0;
    for (int k = 0; k < 3; ++k) {
      const int e = f[k];
      double own = 0, cross = 0;
      if (pw.w1_tilde(e) > 0 && g[k] > 0) own = coef[k] * (-g[k] / (2.0 * pw.w1_tilde(e)));
      const double j12 = pw.w2(t) / pw.w1(e);
      for (int q = 0; q < 3; ++q) {
        if (q == k) continue;
        const double a = pw.w1_tilde(f[q]);
        if (a > 0 && g[q] > 0) cross += coef[q] * (j12 / a) / (2.0 * g[q]);
      }
      const bool tied = has_min && (pw.tied_mask[t] >> k & 1u);
      if (tied) {
        d.down(e) += cross;
        d.up(e) += ntied > 1 ? own : cross;
      } else {
        d.down(e) += own;
        d.up(e) += own;
      }
    }
  }
  return d;
}

// d mu2 / d w1_tilde, for the unit eigenvector y of L0
inline Eigen::VectorXd mu_derivative(const SimplicialComplex& c, const PerturbedWeights& pw,
                                     const WeightJacobians& jac, const Eigen::VectorXd& y, double mu) {
  const int n = c.num_vertices(), m = c.num_edges();
  Eigen::VectorXd q(n), dw0(n);
  for (int v = 0; v < n; ++v) {
    q(v) = y(v) / std::sqrt(pw.w0_tilde(v));
    dw0(v) = -mu * y(v) * y(v) / pw.w0_tilde(v);
  }
  Eigen::VectorXd d = jac.J10 * dw0;
  for (int e = 0; e < m; ++e) {
    double diff = q(c.edges()[e][0]) - q(c.edges()[e][1]);
    d(e) += diff * diff;
  }
  return d;
}

inline GradientInfo free_gradient(const SimplicialComplex& c, const PerturbedWeights& pw, const LaplacianBundle&,
                                  const SpectralPoint& sp_lambda, const SpectralPoint& sp_mu,
                                  const WeightJacobians& jac, const FunctionalParams& p, double eps,
                                  const Perturbation* E = nullptr) {
  const int m = c.num_edges();
  GradientInfo g;
  g.degenerate = sp_lambda.multiplicity_flag || sp_mu.multiplicity_flag;
  Eigen::VectorXd dF = sp_lambda.value * lambda_derivative(c, pw, jac, sp_lambda.vector);
  double slack = penalty_slack(sp_mu.value, p);
  if (slack > 0.0) dF -= (p.alpha / p.mu_bar) * slack * mu_derivative(c, pw, jac, sp_mu.vector, sp_mu.value);
  g.G = eps * dF;
  g.support.assign(m, 1);
  g.G_projected = g.G;
  for (int e = 0; e < m; ++e)
    if (!pw.live(e)) {
      g.support[e] = 0;
      g.active_set.push_back(e);
      g.G_projected(e) = 0.0;
    }
  if (E) {
    Eigen::VectorXd pe = E->values;
    for (int e : g.active_set) pe(e) = 0.0;
    double nn = pe.squaredNorm();
    g.kappa = nn > 0 ? g.G_projected.dot(pe) / nn : 0.0;
  }
  return g;
}

inline Eigen::VectorXd project_support(const Eigen::VectorXd& v, const GradientInfo& g) {
  Eigen::VectorXd out = v;
  for (int e : g.active_set) out(e) = 0.0;
  return out;
}

// -P+ G + kappa P+ E
inline Eigen::VectorXd constrained_direction(const Perturbation& E, const GradientInfo& g) {
  Eigen::VectorXd pe = project_support(E.values, g);
  double nn = pe.squaredNorm();
  if (nn == 0.0) throw Error(ErrorCode::ZeroProjectedNorm, "P+ E vanishes");
  double kappa = g.G_projected.dot(pe) / nn;
  return -g.G_projected + kappa * pe;
}

// -P+ G inside the ball; on the sphere the outward part is removed
inline Eigen::VectorXd free_direction(const Perturbation& E, const GradientInfo& g, double boundary_tol = 1e-10) {
  Eigen::VectorXd d = -g.G_projected;
  if (E.norm() < 1.0 - boundary_tol) return d;
  Eigen::VectorXd pe = project_support(E.values, g);
  double nn = pe.squaredNorm();
  if (nn == 0.0) return d;
  double kappa = g.G_projected.dot(pe) / nn;
  return d + std::min(0.0, kappa) * pe;
}

// Closest-in-direction point of the unit sphere intersected with {v >= lb}.
// Entries below lb are clamped, the rest rescaled; repeated while scaling
// creates new violations.
inline Eigen::VectorXd project_sphere_box(const Eigen::VectorXd& v, const Eigen::VectorXd& lb) {
  const int m = static_cast<int>(v.size());
  std::vector<char> clamped(m, 0);
  Eigen::VectorXd out = v;
  for (int guard = 0; guard <= m; ++guard) {
    double cn = 0, fn = 0;
    for (int e = 0; e < m; ++e) {
      if (!clamped[e] && v(e) < lb(e)) clamped[e] = 1;
      if (clamped[e]) cn += lb(e) * lb(e);
      else fn += v(e) * v(e);
    }
    if (cn >= 1.0) {
      double s = 1.0 / std::sqrt(cn);
      for (int e = 0; e < m; ++e) out(e) = clamped[e] ? lb(e) * s : 0.0;
      return out;
    }
    if (fn == 0.0) {
      int free = 0;
      for (int e = 0; e < m; ++e) free += !clamped[e];
      double fill = free > 0 ? std::sqrt((1.0 - cn) / free) : 0.0;
      for (int e = 0; e < m; ++e) out(e) = clamped[e] ? lb(e) : fill;
      return out;
    }
    double s = std::sqrt((1.0 - cn) / fn);
    bool changed = false;
    for (int e = 0; e < m; ++e) {
      if (clamped[e]) {
        out(e) = lb(e);
      } else {
        out(e) = s * v(e);
        if (out(e) < lb(e)) {
          clamped[e] = 1;
          changed = true;
        }
      }
    }
    if (!changed) return out;
  }
  return out;
}

}  // namespace holostab
