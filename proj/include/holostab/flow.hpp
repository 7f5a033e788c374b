#pragma once

#include "holostab/complex.hpp"
#include "holostab/error.hpp"
#include "holostab/functional.hpp"
#include "holostab/ichol.hpp"
#include "holostab/kernel_basis.hpp"
#include "holostab/laplacians.hpp"
#include "holostab/spectral.hpp"
#include "holostab/weights.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace holostab {

struct FlowConfig {
  double eps0 = 1e-3;
  double delta_eps = 0.0;       // 0: delta_eps_rel * ||w1||
  double delta_eps_rel = 0.05;
  double alpha_lo = 1.0;
  double alpha_hi = 100.0;
  double alpha_growth = 10.0;
  double h0 = 0.1;
  double beta_step = 1.5;
  double f_tol = 1e-6;
  int max_outer = 100;
  int max_inner = 500;
  int max_rejects = 40;         // consecutive rejections before a flow gives up
  double inner_rel_tol = 1e-9;  // relative F decrease over inner_window accepted steps
  int inner_window = 10;
  double stationarity_tol = 1e-4;
  double mu_factor = 0.75;
  double mu_bar = 0.0;  // > 0 overrides mu_factor * mu2(initial)
  double elim_tol = 1e-8;
  int refine_steps = 8;
  bool snap = true;
  SolverConfig solver;
  std::optional<Eigen::VectorXd> E0;

  void validate() const {
    auto bad = [](const char* what) { throw Error(ErrorCode::InvalidArgument, what); };
    if (!(eps0 > 0)) bad("eps0 must be positive");
    if (delta_eps < 0 || !(delta_eps_rel > 0)) bad("delta_eps must be positive");
    if (!(alpha_lo > 0) || alpha_hi < alpha_lo || !(alpha_growth > 1)) bad("alpha bounds");
    if (!(h0 > 0) || !(beta_step > 1)) bad("step control");
    if (!(f_tol > 0) || max_outer < 1 || max_inner < 1) bad("stopping parameters");
    if (!(mu_factor > 0) || mu_bar < 0) bad("mu_bar");
  }
};

enum class Phase { Alpha, Constrained, Free, Refine };

inline const char* to_string(Phase p) {
  switch (p) {
    case Phase::Alpha: return "alpha";
    case Phase::Constrained: return "constrained";
    case Phase::Free: return "free";
    case Phase::Refine: return "refine";
  }
  return "?";
}

struct TrajectoryRow {
  int step = 0;
  Phase phase = Phase::Constrained;
  double eps = 0, F = 0, lambda_plus = 0, mu2 = 0, normE = 0, h = 0;
  bool accepted = false;
  int segment = 0;  // constant while phase, eps, alpha and support stay fixed
};

struct SolverStats {
  long evaluations = 0;
  long eig_iterations = 0;
  long lsqr_iterations = 0;
  long dense_solves = 0;
  long degenerate_points = 0;
};

// Everything the flow needs at one (eps, E).
struct EvalPoint {
  double eps = 0;
  Perturbation E;
  PerturbedWeights pw;
  LaplacianBundle bundle;
  SpectralPoint lambda;
  SpectralPoint mu;
};

// Cached per-complex data, preconditioners and warm starts.
class Evaluator {
 public:
  Evaluator(const SimplicialComplex& c, const WeightProfile& p, const SolverConfig& cfg)
      : c_(c), p_(p), cfg_(cfg) {
    p_.validate(c_);
    betti_ = betti_numbers(c_);
    up_kernel_dim_ = c_.num_edges() - betti_.rank_b2;
    comp_ = components(c_.num_vertices(), c_.edges());
    ncomp_ = betti_.b0;
    const bool need_iter = cfg_.mode == SolverMode::Iterative ||
                           (cfg_.mode == SolverMode::Auto && std::max(c_.num_edges(), c_.num_vertices()) >
                                                                  cfg_.dense_threshold);
    if (need_iter && c_.num_edges() > 0) N_ = up_null_basis(c_, betti_.rank_b2);
    if (need_iter && cfg_.precond == PrecondKind::Ichol) {
      auto b = assemble(c_, perturb(c_, p_, 0.0, Perturbation::zero(c_.num_edges())));
      IcholOptions opt;
      opt.initial_shift_rel = cfg_.precond_shift_rel;
      if (c_.num_edges() > 0) up_precond_ = ichol_factor(b.L1_up, opt);  // L0 left unpreconditioned
    }
  }

  const SimplicialComplex& complex() const { return c_; }
  const WeightProfile& profile() const { return p_; }
  const Betti& betti() const { return betti_; }
  int up_kernel_dim() const { return up_kernel_dim_; }
  const SolverStats& stats() const { return stats_; }

  EvalPoint evaluate(double eps, const Perturbation& E) {
    EvalPoint ev;
    ev.eps = eps;
    ev.E = E;
    ev.pw = perturb(c_, p_, eps, E);
    ev.bundle = assemble(c_, ev.pw);
    const int m = c_.num_edges();
    if (m > up_kernel_dim_) {
      EigenHints h;
      h.strict = false;
      Eigen::MatrixXd K;
      if (N_) {
        K = up_kernel_basis(*N_, ev.pw);
        h.kernel_basis = &K;
      }
      if (up_precond_) h.precond = &*up_precond_;
      if (up_warm_.size() > 0) h.warm_start = &up_warm_;
      ev.lambda = smallest_nonzero_eig(ev.bundle.L1_up, up_kernel_dim_, cfg_, h);
      if (!ev.lambda.dense) up_warm_ = ev.lambda.block;
      record(ev.lambda);
    } else {
      ev.lambda.value = 0.0;  // no triangles: nothing to push down
      ev.lambda.vector = Eigen::VectorXd::Zero(m);
    }
    if (c_.num_vertices() > ncomp_) {
      EigenHints h;
      h.strict = false;
      Eigen::MatrixXd K;
      if (N_) {
        K = l0_kernel_basis(comp_, ncomp_, ev.pw);
        h.kernel_basis = &K;
      }
      if (l0_warm_.size() > 0) h.warm_start = &l0_warm_;
      ev.mu = smallest_nonzero_eig(ev.bundle.L0, ncomp_, cfg_, h);
      if (!ev.mu.dense) l0_warm_ = ev.mu.block;
      record(ev.mu);
    } else {
      ev.mu.value = std::numeric_limits<double>::infinity();
      ev.mu.vector = Eigen::VectorXd::Zero(c_.num_vertices());
    }
    ++stats_.evaluations;
    if (ev.lambda.multiplicity_flag || ev.mu.multiplicity_flag) ++stats_.degenerate_points;
    return ev;
  }

  GradientInfo gradient(const EvalPoint& ev, const FunctionalParams& fp) const {
    auto jac = weight_jacobians(c_, p_, ev.pw);
    SpectralPoint mu = ev.mu;
    if (!std::isfinite(mu.value)) mu.value = fp.mu_bar;  // single vertex components only
    return free_gradient(c_, ev.pw, ev.bundle, ev.lambda, mu, jac, fp, ev.eps, &ev.E);
  }

 private:
  void record(const SpectralPoint& sp) {
    stats_.eig_iterations += sp.iterations;
    stats_.lsqr_iterations += sp.lsqr_iterations;
    if (sp.dense) ++stats_.dense_solves;
  }

  const SimplicialComplex& c_;
  WeightProfile p_;
  SolverConfig cfg_;
  Betti betti_;
  int up_kernel_dim_ = 0;
  std::vector<int> comp_;
  int ncomp_ = 1;
  std::optional<Eigen::MatrixXd> N_;
  std::optional<IcholFactor> up_precond_;
  Eigen::MatrixXd up_warm_, l0_warm_;
  SolverStats stats_;
};

inline double functional_value(const EvalPoint& ev, const FunctionalParams& fp) {
  double mu = std::isfinite(ev.mu.value) ? ev.mu.value : fp.mu_bar;
  return eval_functional(ev.lambda.value, mu, fp);
}

struct FlowState {
  double eps = 0;
  Perturbation E;
  double h = 0.1;
  double F_val = 0;
  Phase phase = Phase::Constrained;
  int accept_streak = 0;
  std::vector<TrajectoryRow> trajectory;
  std::vector<std::string> warnings;
  int segment = 0;
  bool hit_cap = false;
  int stalls = 0;  // free flows that ended inside the ball
  std::optional<EvalPoint> current;
};

inline std::vector<char> support_of(const PerturbedWeights& pw) {
  std::vector<char> s(pw.w1_tilde.size());
  for (int e = 0; e < pw.w1_tilde.size(); ++e) s[e] = pw.live(e);
  return s;
}

inline Eigen::VectorXd lower_bound(const WeightProfile& p, double eps) { return -p.w1 / eps; }

// Zero-weight edges after rounding at tol.
inline std::vector<int> eliminated_edges(const PerturbedWeights& pw, double tol) {
  std::vector<int> out;
  for (int e = 0; e < pw.w1_tilde.size(); ++e)
    if (pw.w1_tilde(e) <= tol) out.push_back(e);
  return out;
}

inline Betti reduced_betti(const SimplicialComplex& c, const PerturbedWeights& pw, double tol) {
  std::vector<bool> keep(c.num_edges());
  for (int e = 0; e < c.num_edges(); ++e) keep[e] = pw.w1_tilde(e) > tol;
  return betti_reduced(c, keep);
}

namespace detail {

inline void log_row(FlowState& s, const EvalPoint& ev, double F, bool accepted) {
  TrajectoryRow r;
  r.step = static_cast<int>(s.trajectory.size());
  r.phase = s.phase;
  r.eps = ev.eps;
  r.F = F;
  r.lambda_plus = ev.lambda.value;
  r.mu2 = ev.mu.value;
  r.normE = ev.E.norm();
  r.h = s.h;
  r.accepted = accepted;
  r.segment = s.segment;
  s.trajectory.push_back(r);
}

inline bool success(Evaluator& ev, const EvalPoint& pt, double F, const FlowConfig& cfg) {
  if (F > cfg.f_tol) return false;
  return reduced_betti(ev.complex(), pt.pw, cfg.elim_tol).b1 > ev.betti().b1;
}

}  // namespace detail

// Norm-corrected Euler on the sphere at fixed eps. Stops at a stationary
// point, on a stalled F, or on success.
inline FlowState inner_constrained_flow(Evaluator& ev, FlowState s, const FunctionalParams& fp,
                                        const FlowConfig& cfg) {
  if (!s.current) s.current = ev.evaluate(s.eps, s.E);
  s.F_val = functional_value(*s.current, fp);
  const Eigen::VectorXd lb = lower_bound(ev.profile(), s.eps);
  ++s.segment;
  auto support = support_of(s.current->pw);
  detail::log_row(s, *s.current, s.F_val, true);
  std::vector<double> accepted_F{s.F_val};
  int rejects = 0;
  s.hit_cap = false;
  for (int it = 0; it < cfg.max_inner; ++it) {
    if (detail::success(ev, *s.current, s.F_val, cfg)) return s;
    GradientInfo g = ev.gradient(*s.current, fp);
    const double gn = g.G_projected.norm();
    if (gn == 0.0) return s;
    Eigen::VectorXd d;
    try {
      d = constrained_direction(s.E, g);
    } catch (const Error&) {
      s.h /= cfg.beta_step;
      if (++rejects > cfg.max_rejects) return s;
      continue;
    }
    if (d.norm() <= cfg.stationarity_tol * gn) return s;

    Perturbation trial(project_sphere_box(s.E.values + s.h * d, lb));
    EvalPoint pt = ev.evaluate(s.eps, trial);
    double F = functional_value(pt, fp);
    if (F < s.F_val) {
      auto ns = support_of(pt.pw);
      if (ns != support) {
        support = ns;
        ++s.segment;
        s.accept_streak = 0;
      }
      s.E = trial;
      s.F_val = F;
      s.current = std::move(pt);
      detail::log_row(s, *s.current, F, true);
      rejects = 0;
      if (++s.accept_streak >= 2) {
        s.h *= cfg.beta_step;
        s.accept_streak = 0;
      }
      accepted_F.push_back(F);
      const int w = cfg.inner_window;
      if (static_cast<int>(accepted_F.size()) > w) {
        double old = accepted_F[accepted_F.size() - 1 - w];
        if (old - F <= cfg.inner_rel_tol * std::max(old, 1e-300)) return s;
      }
    } else {
      detail::log_row(s, pt, F, false);
      s.h /= cfg.beta_step;
      s.accept_streak = 0;
      if (++rejects > cfg.max_rejects) return s;
    }
  }
  s.hit_cap = true;
  return s;
}

// Free gradient flow inside the ball until ||E|| = 1.
inline FlowState free_transition(Evaluator& ev, FlowState s, const FunctionalParams& fp, const FlowConfig& cfg) {
  if (!s.current) s.current = ev.evaluate(s.eps, s.E);
  s.F_val = functional_value(*s.current, fp);
  const Eigen::VectorXd lb = lower_bound(ev.profile(), s.eps);
  const Phase saved = s.phase;
  s.phase = Phase::Free;
  ++s.segment;
  detail::log_row(s, *s.current, s.F_val, true);
  int rejects = 0;
  s.hit_cap = false;
  for (int it = 0; it < cfg.max_inner; ++it) {
    if (s.E.norm() >= 1.0 - 1e-10) break;
    if (detail::success(ev, *s.current, s.F_val, cfg)) break;
    GradientInfo g = ev.gradient(*s.current, fp);
    Eigen::VectorXd d = free_direction(s.E, g);
    if (d.norm() == 0.0) break;
    Eigen::VectorXd v = (s.E.values + s.h * d).cwiseMax(lb);
    if (v.norm() >= 1.0) v = project_sphere_box(v, lb);
    Perturbation trial(v);
    EvalPoint pt = ev.evaluate(s.eps, trial);
    double F = functional_value(pt, fp);
    if (F < s.F_val) {
      s.E = trial;
      s.F_val = F;
      s.current = std::move(pt);
      detail::log_row(s, *s.current, F, true);
      rejects = 0;
      if (++s.accept_streak >= 2) {
        s.h *= cfg.beta_step;
        s.accept_streak = 0;
      }
    } else {
      detail::log_row(s, pt, F, false);
      s.h /= cfg.beta_step;
      s.accept_streak = 0;
      if (++rejects > cfg.max_rejects) break;
    }
  }
  if (s.E.norm() < 1.0 - 1e-10 && !detail::success(ev, *s.current, s.F_val, cfg)) {
    // flow stalled inside the ball, push radially to the sphere
    Eigen::VectorXd v = s.E.values;
    if (v.norm() == 0.0) v = -ev.profile().w1;
    s.E = Perturbation(project_sphere_box(v / v.norm(), lb));
    s.current = ev.evaluate(s.eps, s.E);
    s.F_val = functional_value(*s.current, fp);
    ++s.stalls;
  }
  s.phase = saved;
  return s;
}

struct AlphaResult {
  double alpha = 1.0;
  FlowState state;
};

namespace detail {

// steepest admissible direction at E = 0 from one-sided rates
inline Eigen::VectorXd tie_aware_descent(Evaluator& ev, const EvalPoint& pt, const Eigen::VectorXd& x,
                                         const FunctionalParams& fp) {
  const auto& c = ev.complex();
  auto os = lambda_derivative_one_sided(c, pt.pw, x);
  const double lam = pt.lambda.value;
  Eigen::VectorXd smooth = Eigen::VectorXd::Zero(c.num_edges());
  double slack = std::isfinite(pt.mu.value) ? penalty_slack(pt.mu.value, fp) : 0.0;
  if (slack > 0) {
    auto jac = weight_jacobians(c, ev.profile(), pt.pw);
    smooth = -(fp.alpha / fp.mu_bar) * slack * mu_derivative(c, pt.pw, jac, pt.mu.vector, pt.mu.value);
  }
  Eigen::VectorXd d(c.num_edges());
  for (int e = 0; e < c.num_edges(); ++e) {
    double down = pt.pw.live(e) ? std::max(0.0, lam * os.down(e) + smooth(e)) : 0.0;
    double up = std::max(0.0, -(lam * os.up(e) + smooth(e)));
    d(e) = down >= up ? -down : up;
  }
  return pt.eps * d;
}

}  // namespace detail

// Steepest descent from E = 0. Every weight ratio is tied there, so one-sided
// rates are used; when lambda_plus is multiple each vector in the cluster is
// tried and the steepest branch wins.
inline Eigen::VectorXd initial_guess(Evaluator& ev, const FunctionalParams& fp, double eps) {
  const int m = ev.complex().num_edges();
  EvalPoint pt = ev.evaluate(eps, Perturbation::zero(m));
  Eigen::VectorXd d = detail::tie_aware_descent(ev, pt, pt.lambda.vector, fp);
  const int k = ev.up_kernel_dim();
  if (pt.lambda.multiplicity_flag && m > k && m <= kExactRankLimit) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(pt.bundle.L1_up)};
    const double lam = es.eigenvalues()(k);
    const double tol = 1e-6 * std::max(std::abs(es.eigenvalues()(m - 1)), 1e-300);
    for (int j = k; j < m && es.eigenvalues()(j) <= lam + tol; ++j) {
      Eigen::VectorXd dj = detail::tie_aware_descent(ev, pt, es.eigenvectors().col(j), fp);
      if (dj.norm() > d.norm() * (1 + 1e-9)) d = dj;
    }
  }
  if (d.norm() == 0.0) d = -ev.profile().w1;
  return project_sphere_box(d / d.norm(), lower_bound(ev.profile(), eps));
}

inline AlphaResult alpha_phase(Evaluator& ev, FunctionalParams fp, const FlowConfig& cfg) {
  AlphaResult r;
  FlowState s;
  s.eps = cfg.eps0;
  s.h = cfg.h0;
  s.phase = Phase::Alpha;
  fp.alpha = cfg.alpha_lo;
  const Eigen::VectorXd lb = lower_bound(ev.profile(), cfg.eps0);
  if (cfg.E0) {
    if (cfg.E0->size() != ev.complex().num_edges()) throw Error(ErrorCode::InvalidArgument, "E0 size mismatch");
    Eigen::VectorXd v = *cfg.E0;
    if (v.norm() == 0.0) throw Error(ErrorCode::InvalidArgument, "E0 must be nonzero");
    s.E = Perturbation(project_sphere_box(v / v.norm(), lb));
  } else {
    s.E = Perturbation(initial_guess(ev, fp, cfg.eps0));
  }
  for (;;) {
    s.current.reset();
    Eigen::VectorXd before = s.E.values;
    s = inner_constrained_flow(ev, std::move(s), fp, cfg);
    if (s.hit_cap) s.warnings.push_back("alpha phase inner flow hit max_inner");
    bool penalty_active = penalty_slack(s.current->mu.value, fp) > 0.0;
    bool first = fp.alpha == cfg.alpha_lo;
    if (!penalty_active && first) break;
    if (!first && (s.E.values - before).norm() < 1e-8) break;
    if (fp.alpha >= cfg.alpha_hi) {
      s.warnings.push_back("alpha phase reached alpha_hi");
      break;
    }
    fp.alpha = std::min(cfg.alpha_hi, fp.alpha * cfg.alpha_growth);
  }
  r.alpha = fp.alpha;
  r.state = std::move(s);
  return r;
}

struct StabilityResult {
  bool converged = false;
  double eps_star = 0;
  Perturbation E;
  double F = 0;
  double alpha = 1;
  double mu_bar = 1;
  std::vector<int> eliminated;
  Betti betti_before, betti_after;
  double lambda_plus = 0, mu2 = 0;
  double runtime_seconds = 0;
  SolverStats stats;
  std::vector<TrajectoryRow> trajectory;
  std::vector<std::string> warnings;
  int outer_iterations = 0;
  Eigen::VectorXd w1_final;
};

inline double initial_mu2(Evaluator& ev) {
  auto pt = ev.evaluate(0.0, Perturbation::zero(ev.complex().num_edges()));
  return pt.mu.value;
}

namespace detail {

// Extreme point of the eliminated pattern: zero exactly those edges, nothing else.
inline std::optional<FlowState> try_snap(Evaluator& ev, const std::vector<int>& elim, const FunctionalParams& fp,
                                         const FlowConfig& cfg, const FlowState& base) {
  if (elim.empty()) return std::nullopt;
  const auto& w1 = ev.profile().w1;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(w1.size());
  double nn = 0;
  for (int e : elim) {
    v(e) = -w1(e);
    nn += w1(e) * w1(e);
  }
  const double eps = std::sqrt(nn);
  FlowState s = base;
  s.eps = eps;
  s.E = Perturbation(v / eps);
  s.phase = Phase::Refine;
  s.current = ev.evaluate(eps, s.E);
  s.F_val = functional_value(*s.current, fp);
  ++s.segment;
  detail::log_row(s, *s.current, s.F_val, true);
  if (!success(ev, *s.current, s.F_val, cfg)) return std::nullopt;
  return s;
}

// Free transition followed by a constrained run at a new eps.
inline FlowState move_to(Evaluator& ev, FlowState s, double eps, const FunctionalParams& fp, const FlowConfig& cfg) {
  s.E = Perturbation(s.E.values * (s.eps / eps));
  s.eps = eps;
  s.current.reset();
  s = free_transition(ev, std::move(s), fp, cfg);
  if (!success(ev, *s.current, s.F_val, cfg)) s = inner_constrained_flow(ev, std::move(s), fp, cfg);
  if (s.hit_cap) s.warnings.push_back("inner flow hit max_inner at eps=" + std::to_string(eps));
  return s;
}

}  // namespace detail

inline StabilityResult run_stability(const SimplicialComplex& c, const WeightProfile& p, const FlowConfig& cfg) {
  cfg.validate();
  auto t0 = std::chrono::steady_clock::now();
  Evaluator ev(c, p, cfg.solver);
  StabilityResult res;
  res.betti_before = ev.betti();
  res.betti_after = res.betti_before;
  FunctionalParams fp;
  double mu0 = initial_mu2(ev);
  fp.mu_bar = cfg.mu_bar > 0 ? cfg.mu_bar : cfg.mu_factor * (std::isfinite(mu0) ? mu0 : 1.0);
  res.mu_bar = fp.mu_bar;
  auto finish = [&](FlowState& s, bool ok) {
    res.converged = ok;
    res.eps_star = s.eps;
    res.E = s.E;
    res.F = s.F_val;
    res.lambda_plus = s.current->lambda.value;
    res.mu2 = s.current->mu.value;
    res.w1_final = s.current->pw.w1_tilde;
    res.eliminated = eliminated_edges(s.current->pw, cfg.elim_tol);
    res.betti_after = reduced_betti(c, s.current->pw, cfg.elim_tol);
    res.trajectory = std::move(s.trajectory);
    res.warnings.insert(res.warnings.end(), s.warnings.begin(), s.warnings.end());
    if (s.stalls > 0)
      res.warnings.push_back(std::to_string(s.stalls) + " free flow(s) stalled inside the ball and were rescaled");
    res.stats = ev.stats();
    res.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (ok && res.betti_before.b1 >= 2)
      for (int e : res.eliminated)
        if (c.edge_cofaces(e).size() >= 2) {
          auto l = c.edge_labels(e);
          res.warnings.push_back("eliminated edge [" + std::to_string(l[0]) + "," + std::to_string(l[1]) +
                                 "] is shared by several triangles next to several holes");
        }
    return res;
  };

  if (c.num_triangles() == 0) {
    // nothing to fill, so removing edges can only destroy holes
    FlowState s;
    s.E = Perturbation::zero(c.num_edges());
    s.current = ev.evaluate(0.0, s.E);
    s.warnings.push_back("complex has no triangles; no hole can be created");
    return finish(s, false);
  }

  AlphaResult ar = alpha_phase(ev, fp, cfg);
  fp.alpha = ar.alpha;
  res.alpha = ar.alpha;
  FlowState s = std::move(ar.state);
  s.phase = Phase::Constrained;
  const double de = cfg.delta_eps > 0 ? cfg.delta_eps : cfg.delta_eps_rel * p.w1.norm();

  FlowState prev = s;
  bool ok = detail::success(ev, *s.current, s.F_val, cfg);
  int outer = 0;
  while (!ok && outer < cfg.max_outer) {
    ++outer;
    prev = s;
    s = detail::move_to(ev, std::move(s), s.eps + de, fp, cfg);
    ok = detail::success(ev, *s.current, s.F_val, cfg);
  }
  res.outer_iterations = outer;
  if (!ok) return finish(s, false);

  // tighten the bracket [prev.eps, s.eps]
  if (outer > 0) {
    double lo = prev.eps;
    for (int k = 0; k < cfg.refine_steps; ++k) {
      double mid = 0.5 * (lo + s.eps);
      FlowState probe = prev;
      probe.trajectory = std::move(s.trajectory);
      probe.segment = s.segment;
      probe.warnings = s.warnings;
      probe.stalls = s.stalls;
      probe.phase = Phase::Refine;
      probe = detail::move_to(ev, std::move(probe), mid, fp, cfg);
      if (detail::success(ev, *probe.current, probe.F_val, cfg)) {
        s = std::move(probe);
      } else {
        lo = mid;
        s.trajectory = std::move(probe.trajectory);
        s.segment = probe.segment;
        s.warnings = probe.warnings;
        s.stalls = probe.stalls;
      }
    }
  }
  if (cfg.snap) {
    auto snapped = detail::try_snap(ev, eliminated_edges(s.current->pw, cfg.elim_tol), fp, cfg, s);
    if (snapped && snapped->eps < s.eps) s = std::move(*snapped);
  }
  return finish(s, true);
}

}  // namespace holostab
