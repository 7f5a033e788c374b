#pragma once

#include "holostab/error.hpp"
#include "holostab/flow.hpp"
#include "holostab/io.hpp"
#include "holostab/spectral.hpp"

#include <string>

namespace holostab {

inline const char* to_string(SolverMode m) {
  switch (m) {
    case SolverMode::Dense: return "dense";
    case SolverMode::Iterative: return "iterative";
    case SolverMode::Auto: return "auto";
  }
  return "auto";
}

inline const char* to_string(PrecondKind k) { return k == PrecondKind::Ichol ? "ichol" : "none"; }

inline SolverMode solver_mode_from(const std::string& s) {
  if (s == "dense") return SolverMode::Dense;
  if (s == "iterative") return SolverMode::Iterative;
  if (s == "auto") return SolverMode::Auto;
  throw Error(ErrorCode::InvalidArgument, "unknown solver mode '" + s + "'");
}

inline PrecondKind precond_from(const std::string& s) {
  if (s == "none") return PrecondKind::None;
  if (s == "ichol") return PrecondKind::Ichol;
  throw Error(ErrorCode::InvalidArgument, "unknown preconditioner '" + s + "'");
}

inline Json to_json(const SolverConfig& s) {
  Json j;
  j["mode"] = to_string(s.mode);
  j["precond"] = to_string(s.precond);
  j["lsqr_tol"] = s.lsqr_tol;
  j["max_iters"] = s.max_iters;
  j["lsqr_max_iters"] = s.lsqr_max_iters;
  j["dense_threshold"] = s.dense_threshold;
  j["eig_tol"] = s.eig_tol;
  j["shift_rel"] = s.shift_rel;
  j["precond_shift_rel"] = s.precond_shift_rel;
  j["block_size"] = s.block_size;
  return j;
}

inline Json to_json(const FlowConfig& c) {
  Json j;
  j["eps0"] = c.eps0;
  j["delta_eps"] = c.delta_eps;
  j["delta_eps_rel"] = c.delta_eps_rel;
  j["alpha_lo"] = c.alpha_lo;
  j["alpha_hi"] = c.alpha_hi;
  j["alpha_growth"] = c.alpha_growth;
  j["h0"] = c.h0;
  j["beta_step"] = c.beta_step;
  j["f_tol"] = c.f_tol;
  j["max_outer"] = c.max_outer;
  j["max_inner"] = c.max_inner;
  j["max_rejects"] = c.max_rejects;
  j["inner_rel_tol"] = c.inner_rel_tol;
  j["inner_window"] = c.inner_window;
  j["stationarity_tol"] = c.stationarity_tol;
  j["mu_factor"] = c.mu_factor;
  j["mu_bar"] = c.mu_bar;
  j["elim_tol"] = c.elim_tol;
  j["refine_steps"] = c.refine_steps;
  j["snap"] = c.snap;
  j["solver"] = to_json(c.solver);
  return j;
}

namespace detail {

template <typename T>
void take(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad config value for '") + key + "'");
  }
}

}  // namespace detail

// keys present in j override cfg; unknown keys are rejected
inline void apply_json(const Json& j, SolverConfig& s) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "solver config must be an object");
  static const char* known[] = {"mode", "precond", "lsqr_tol", "max_iters", "lsqr_max_iters", "dense_threshold",
                                "eig_tol", "shift_rel", "precond_shift_rel", "block_size"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(std::begin(known), std::end(known), it.key()) == std::end(known))
      throw Error(ErrorCode::InvalidArgument, "unknown solver config key '" + it.key() + "'");
  std::string mode = to_string(s.mode), pre = to_string(s.precond);
  detail::take(j, "mode", mode);
  detail::take(j, "precond", pre);
  s.mode = solver_mode_from(mode);
  s.precond = precond_from(pre);
  detail::take(j, "lsqr_tol", s.lsqr_tol);
  detail::take(j, "max_iters", s.max_iters);
  detail::take(j, "lsqr_max_iters", s.lsqr_max_iters);
  detail::take(j, "dense_threshold", s.dense_threshold);
  detail::take(j, "eig_tol", s.eig_tol);
  detail::take(j, "shift_rel", s.shift_rel);
  detail::take(j, "precond_shift_rel", s.precond_shift_rel);
  detail::take(j, "block_size", s.block_size);
}

inline void apply_json(const Json& j, FlowConfig& c) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "flow config must be an object");
  static const char* known[] = {"eps0", "delta_eps", "delta_eps_rel", "alpha_lo", "alpha_hi", "alpha_growth",
                                "h0", "beta_step", "f_tol", "max_outer", "max_inner", "max_rejects",
                                "inner_rel_tol", "inner_window", "stationarity_tol", "mu_factor", "mu_bar",
                                "elim_tol", "refine_steps", "snap", "solver"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(std::begin(known), std::end(known), it.key()) == std::end(known))
      throw Error(ErrorCode::InvalidArgument, "unknown config key '" + it.key() + "'");
  detail::take(j, "eps0", c.eps0);
  detail::take(j, "delta_eps", c.delta_eps);
  detail::take(j, "delta_eps_rel", c.delta_eps_rel);
  detail::take(j, "alpha_lo", c.alpha_lo);
  detail::take(j, "alpha_hi", c.alpha_hi);
  detail::take(j, "alpha_growth", c.alpha_growth);
  detail::take(j, "h0", c.h0);
  detail::take(j, "beta_step", c.beta_step);
  detail::take(j, "f_tol", c.f_tol);
  detail::take(j, "max_outer", c.max_outer);
  detail::take(j, "max_inner", c.max_inner);
  detail::take(j, "max_rejects", c.max_rejects);
  detail::take(j, "inner_rel_tol", c.inner_rel_tol);
  detail::take(j, "inner_window", c.inner_window);
  detail::take(j, "stationarity_tol", c.stationarity_tol);
  detail::take(j, "mu_factor", c.mu_factor);
  detail::take(j, "mu_bar", c.mu_bar);
  detail::take(j, "elim_tol", c.elim_tol);
  detail::take(j, "refine_steps", c.refine_steps);
  detail::take(j, "snap", c.snap);
  if (j.contains("solver")) apply_json(j.at("solver"), c.solver);
}

inline Json to_json(const SolverStats& s) {
  Json j;
  j["evaluations"] = s.evaluations;
  j["eig_iterations"] = s.eig_iterations;
  j["lsqr_iterations"] = s.lsqr_iterations;
  j["dense_solves"] = s.dense_solves;
  j["degenerate_points"] = s.degenerate_points;
  return j;
}

inline std::string trajectory_csv(const std::vector<TrajectoryRow>& rows) {
  std::string out = "step,phase,eps,F,lambda_plus,mu2,normE,h,accepted,segment\n";
  for (auto& r : rows) {
    CsvRow row;
    row.add(r.step).add(to_string(r.phase)).add(r.eps).add(r.F).add(r.lambda_plus).add(r.mu2).add(r.normE).add(r.h);
    row.add(r.accepted ? 1 : 0).add(r.segment);
    out += row.str();
  }
  return out;
}

inline Json result_json(const SimplicialComplex& c, const WeightProfile& p, const StabilityResult& r) {
  Json j;
  j["converged"] = r.converged;
  j["eps_star"] = r.eps_star;
  Json el = Json::array();
  for (int e : r.eliminated) {
    auto l = c.edge_labels(e);
    el.push_back({l[0], l[1]});
  }
  j["eliminated_edges"] = el;
  j["betti_before"] = r.betti_before.b1;
  j["betti_after"] = r.betti_after.b1;
  j["components_before"] = r.betti_before.b0;
  j["components_after"] = r.betti_after.b0;
  j["percentile"] = p.w1.size() ? r.eps_star / p.w1.sum() : 0.0;
  j["F"] = r.F;
  j["lambda_plus"] = r.lambda_plus;
  j["mu2"] = r.mu2;
  j["alpha"] = r.alpha;
  j["mu_bar"] = r.mu_bar;
  j["outer_iterations"] = r.outer_iterations;
  j["runtime_seconds"] = r.runtime_seconds;
  j["solver_stats"] = to_json(r.stats);
  j["warnings"] = r.warnings;
  std::vector<double> E(r.E.values.data(), r.E.values.data() + r.E.values.size());
  std::vector<double> w(r.w1_final.data(), r.w1_final.data() + r.w1_final.size());
  j["perturbation"] = E;
  j["w1_final"] = w;
  return j;
}

}  // namespace holostab
