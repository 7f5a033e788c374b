#pragma once

#include "holostab/error.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cmath>
#include <functional>
#include <tuple>

namespace holostab {

struct LsmrResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double normr = 0;   // ||b - A x||
  double normar = 0;  // ||A^T (b - A x)|| (of the operator actually iterated on)
  bool converged = false;
  bool stagnated = false;
};

enum class LsmrStop {
  NormalResidual,  // ||A^T r|| <= tol ||A^T b|| or ||r|| <= tol ||b||
  Residual,        // ||r|| <= tol ||b|| only, with a stagnation exit
};

namespace detail {

inline std::tuple<double, double, double> sym_ortho(double a, double b) {
  if (b == 0) return {a >= 0 ? 1.0 : -1.0, 0.0, std::abs(a)};
  if (a == 0) return {0.0, b >= 0 ? 1.0 : -1.0, std::abs(b)};
  if (std::abs(b) > std::abs(a)) {
    double tau = a / b;
    double s = (b >= 0 ? 1.0 : -1.0) / std::sqrt(1 + tau * tau);
    return {s * tau, s, b / s};
  }
  double tau = b / a;
  double c = (a >= 0 ? 1.0 : -1.0) / std::sqrt(1 + tau * tau);
  return {c, c * tau, a / c};
}

}  // namespace detail

// LSMR (Golub-Kahan bidiagonalization with MINRES on the normal equations).
template <typename Apply, typename ApplyT>
LsmrResult lsmr(Apply&& A, ApplyT&& At, const Eigen::VectorXd& b, Eigen::Index ncols, double tol,
                int max_iters, LsmrStop stop = LsmrStop::NormalResidual, double damp = 0.0) {
  using Eigen::VectorXd;
  LsmrResult res;
  res.x = VectorXd::Zero(ncols);
  const double normb = b.norm();
  if (normb == 0) {
    res.converged = true;
    return res;
  }
  VectorXd u = b / normb;
  double beta = normb;
  VectorXd v = At(u);
  double alpha = v.norm();
  if (alpha > 0) v /= alpha;
  const double normar0 = alpha * beta;
  if (normar0 == 0) {
    res.normr = normb;
    res.converged = true;
    return res;
  }

  double zetabar = alpha * beta, alphabar = alpha, rho = 1, rhobar = 1, cbar = 1, sbar = 0;
  VectorXd h = v, hbar = VectorXd::Zero(ncols);
  double betadd = beta, betad = 0, rhodold = 1, tautildeold = 0, thetatilde = 0, zeta = 0, d = 0;
  double checkpoint = normb;
  const int window = 20;

  for (int it = 1; it <= max_iters; ++it) {
    u = A(v) - alpha * u;
    beta = u.norm();
    if (beta > 0) {
      u /= beta;
      v = At(u) - beta * v;
      alpha = v.norm();
      if (alpha > 0) v /= alpha;
    }
    auto [chat, shat, alphahat] = detail::sym_ortho(alphabar, damp);
    double rhoold = rho;
    auto [c, s, rho_] = detail::sym_ortho(alphahat, beta);
    rho = rho_;
    double thetanew = s * alpha;
    alphabar = c * alpha;

    double rhobarold = rhobar, zetaold = zeta;
    double thetabar = sbar * rho;
    double rhotemp = cbar * rho;
    auto [cb, sb, rb] = detail::sym_ortho(rhotemp, thetanew);
    cbar = cb; sbar = sb; rhobar = rb;
    zeta = cbar * zetabar;
    zetabar = -sbar * zetabar;

    hbar = h - (thetabar * rho / (rhoold * rhobarold)) * hbar;
    res.x += (zeta / (rho * rhobar)) * hbar;
    h = v - (thetanew / rho) * h;

    double betaacute = chat * betadd, betacheck = -shat * betadd;
    double betahat = c * betaacute;
    betadd = -s * betaacute;
    double thetatildeold = thetatilde;
    auto [ctildeold, stildeold, rhotildeold] = detail::sym_ortho(rhodold, thetabar);
    thetatilde = stildeold * rhobar;
    rhodold = ctildeold * rhobar;
    betad = -stildeold * betad + ctildeold * betahat;
    tautildeold = (zetaold - thetatildeold * tautildeold) / rhotildeold;
    double taud = (zeta - thetatilde * tautildeold) / rhodold;
    d += betacheck * betacheck;
    res.normr = std::sqrt(d + (betad - taud) * (betad - taud) + betadd * betadd);
    res.normar = std::abs(zetabar);
    res.iterations = it;
    if (res.normr <= tol * normb || alpha == 0 || beta == 0 ||
        (stop == LsmrStop::NormalResidual && res.normar <= tol * normar0)) {
      res.converged = true;
      return res;
    }
    if (stop == LsmrStop::Residual && it % window == 0) {
      if (res.normr > 0.99 * checkpoint) {
        res.stagnated = true;
        return res;
      }
      checkpoint = res.normr;
    }
  }
  return res;
}

}  // namespace holostab
