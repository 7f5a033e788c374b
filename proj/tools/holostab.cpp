#include "holostab/bench.hpp"
#include "holostab/config.hpp"
#include "holostab/flow.hpp"
#include "holostab/inspect.hpp"
#include "holostab/io.hpp"
#include "holostab/laplacians.hpp"
#include "holostab/transport.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace holostab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitNotConverged = 2;
constexpr int kExitSolver = 3;

// flow flags are optional so a --config file can supply the base values
struct FlowFlags {
  std::string config;
  std::optional<double> eps0, delta_eps, delta_eps_rel, alpha_lo, alpha_hi, alpha_growth, h0, beta_step, f_tol;
  std::optional<int> max_outer, max_inner, max_rejects, refine_steps;
  std::optional<double> mu_factor, mu_bar, elim_tol, stationarity_tol, inner_rel_tol;
  std::optional<std::string> solver, precond;
  std::optional<double> lsqr_tol, eig_tol;
  std::optional<int> dense_threshold, max_eig_iters;
  bool no_snap = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON config or a manifest from an earlier run");
    app->add_option("--eps0", eps0, "starting perturbation norm");
    app->add_option("--delta-eps", delta_eps, "absolute eps increment per outer step");
    app->add_option("--delta-eps-rel", delta_eps_rel, "eps increment relative to ||w1|| (default 0.05)");
    app->add_option("--alpha-lo", alpha_lo, "first penalty weight");
    app->add_option("--alpha-hi", alpha_hi, "penalty weight cap");
    app->add_option("--alpha-growth", alpha_growth, "penalty weight factor");
    app->add_option("--h0", h0, "initial step size");
    app->add_option("--beta", beta_step, "step grow/shrink factor");
    app->add_option("--f-tol", f_tol, "functional threshold for success");
    app->add_option("--max-outer", max_outer, "cap on eps increments");
    app->add_option("--max-inner", max_inner, "cap on steps per inner flow");
    app->add_option("--max-rejects", max_rejects, "consecutive rejected steps before a flow stops");
    app->add_option("--refine-steps", refine_steps, "bisection steps on the final eps bracket");
    app->add_option("--mu-factor", mu_factor, "connectivity threshold as a fraction of the initial mu2");
    app->add_option("--mu-bar", mu_bar, "absolute connectivity threshold (overrides --mu-factor)");
    app->add_option("--elim-tol", elim_tol, "weight below which an edge counts as eliminated");
    app->add_option("--stationarity-tol", stationarity_tol, "relative projected gradient stop");
    app->add_option("--inner-rel-tol", inner_rel_tol, "relative decrease stop for inner flows");
    app->add_option("--solver", solver, "eigensolver: auto, dense or iterative")
        ->check(CLI::IsMember({"auto", "dense", "iterative"}));
    app->add_option("--precond", precond, "least-squares preconditioner: none or ichol")
        ->check(CLI::IsMember({"none", "ichol"}));
    app->add_option("--lsqr-tol", lsqr_tol, "least-squares tolerance");
    app->add_option("--eig-tol", eig_tol, "eigen residual tolerance relative to ||A||");
    app->add_option("--dense-threshold", dense_threshold, "largest dimension solved densely in auto mode");
    app->add_option("--max-eig-iters", max_eig_iters, "cap on inverse iterations");
    app->add_flag("--no-snap", no_snap, "skip snapping to the eliminated pattern at the end");
  }

  FlowConfig resolve() const {
    FlowConfig c;
    if (!config.empty()) {
      Json j;
      try {
        j = Json::parse(read_file(config));
      } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::InvalidArgument, "malformed config " + config + ": " + e.what());
      }
      if (j.is_object() && j.contains("config")) j = j.at("config");
      apply_json(j, c);
    }
    auto set = [](auto& dst, const auto& src) {
      if (src) dst = *src;
    };
    set(c.eps0, eps0);
    set(c.delta_eps, delta_eps);
    set(c.delta_eps_rel, delta_eps_rel);
    set(c.alpha_lo, alpha_lo);
    set(c.alpha_hi, alpha_hi);
    set(c.alpha_growth, alpha_growth);
    set(c.h0, h0);
    set(c.beta_step, beta_step);
    set(c.f_tol, f_tol);
    set(c.max_outer, max_outer);
    set(c.max_inner, max_inner);
    set(c.max_rejects, max_rejects);
    set(c.refine_steps, refine_steps);
    set(c.mu_factor, mu_factor);
    set(c.mu_bar, mu_bar);
    set(c.elim_tol, elim_tol);
    set(c.stationarity_tol, stationarity_tol);
    set(c.inner_rel_tol, inner_rel_tol);
    set(c.solver.lsqr_tol, lsqr_tol);
    set(c.solver.eig_tol, eig_tol);
    set(c.solver.dense_threshold, dense_threshold);
    set(c.solver.max_iters, max_eig_iters);
    if (solver) c.solver.mode = solver_mode_from(*solver);
    if (precond) c.solver.precond = precond_from(*precond);
    if (no_snap) c.snap = false;
    c.validate();
    return c;
  }
};

std::string utc_now() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Manifest {
  Json j;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  Manifest(const std::string& command, const std::vector<std::string>& argv) {
    j["tool"] = "holostab";
    j["version"] = HOLOSTAB_VERSION;
    j["command"] = command;
    j["argv"] = argv;
    j["started_at"] = utc_now();
  }
  void write(const fs::path& path, int exit_code) {
    j["exit_code"] = exit_code;
    j["wall_clock_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_atomic(path, dump_json(j));
  }
};

int exit_for(const Error& e) { return is_input_error(e.code()) ? kExitInput : kExitSolver; }

int cmd_stability(const std::string& input, const fs::path& out_dir, bool export_matrices, const FlowFlags& flags,
                  Manifest& man) {
  FlowConfig cfg = flags.resolve();
  auto wc = load_complex(input);  // nothing is written before the input parses
  man.j["inputs"] = {input};
  man.j["config"] = to_json(cfg);
  man.j["seed"] = nullptr;
  StabilityResult res;
  try {
    res = run_stability(wc.complex, wc.profile, cfg);
  } catch (const Error& e) {
    man.j["error"] = e.what();
    man.write(out_dir / "manifest.json", exit_for(e));
    throw;
  }
  write_atomic(out_dir / "trajectory.csv", trajectory_csv(res.trajectory));
  Json r = result_json(wc.complex, wc.profile, res);
  write_atomic(out_dir / "result.json", dump_json(r));
  if (export_matrices) {
    auto pw = perturb(wc.complex, wc.profile, res.eps_star, res.E);
    export_bundle((out_dir / "initial").string(),
                  assemble(wc.complex, perturb(wc.complex, wc.profile, 0.0, Perturbation::zero(wc.complex.num_edges()))));
    export_bundle((out_dir / "final").string(), assemble(wc.complex, pw));
  }
  const int code = res.converged ? kExitOk : kExitNotConverged;
  man.j["outputs"] = {"result.json", "trajectory.csv"};
  man.write(out_dir / "manifest.json", code);

  std::printf("converged      %s\n", res.converged ? "yes" : "no");
  std::printf("eps*           %s\n", format_double(res.eps_star).c_str());
  std::printf("eliminated    ");
  for (int e : res.eliminated) {
    auto l = wc.complex.edge_labels(e);
    std::printf(" [%lld,%lld]", static_cast<long long>(l[0]), static_cast<long long>(l[1]));
  }
  std::printf("\nbeta1          %d -> %d\n", res.betti_before.b1, res.betti_after.b1);
  std::printf("runtime        %.3f s\n", res.runtime_seconds);
  for (auto& w : res.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  if (!res.converged)
    std::fprintf(stderr, "NotConverged: no hole created after %d eps increments\n", res.outer_iterations);
  return code;
}

std::string number_tag(double v) {
  std::ostringstream o;
  o << v;
  std::string s = o.str();
  std::replace(s.begin(), s.end(), '.', 'p');
  return s;
}

int cmd_bench(const std::vector<int>& ns, const std::vector<double>& nus, int repeats, std::uint64_t seed,
              double wlo, double whi, int threads, bool save_instances, const fs::path& out_dir,
              const FlowFlags& flags, Manifest& man) {
  FlowConfig cfg = flags.resolve();
  std::vector<BenchSpec> specs;
  for (double nu : nus)
    for (int n : ns) {
      BenchSpec s;
      s.N = n;
      s.nu = nu;
      s.seed = seed;
      s.repeats = repeats;
      s.weight_low = wlo;
      s.weight_high = whi;
      s.validate();
      specs.push_back(s);
    }
  man.j["config"] = to_json(cfg);
  man.j["seed"] = seed;
  man.j["n_list"] = ns;
  man.j["nu_list"] = nus;
  man.j["repeats"] = repeats;
  man.j["weight_low"] = wlo;
  man.j["weight_high"] = whi;
  man.j["threads"] = threads > 0 ? threads : worker_count();

  if (save_instances)
    for (auto& s : specs)
      for (int r = 0; r < s.repeats; ++r) {
        auto inst = generate(s, r);
        auto name = "N" + std::to_string(s.N) + "_nu" + number_tag(s.nu) + "_r" + std::to_string(r) + ".json";
        save_complex(out_dir / "instances" / name, inst.complex, inst.profile);
      }

  auto rep = run_benchmark(specs, cfg, threads);
  write_atomic(out_dir / "bench_report.csv", rep.to_csv(true));
  man.j["outputs"] = {"bench_report.csv"};
  int failed = 0;
  for (auto& r : rep.rows) failed += !r.error.empty() || !r.converged;
  man.j["failed_instances"] = failed;
  double slope = runtime_slope(rep.rows);
  man.j["runtime_slope"] = std::isfinite(slope) ? Json(slope) : Json(nullptr);
  man.write(out_dir / "manifest.json", kExitOk);

  std::printf("%-4s %-6s %-5s %-10s %-10s %s\n", "N", "nu", "m", "eps*", "runtime", "status");
  for (auto& r : rep.rows)
    std::printf("%-4d %-6g %-5d %-10.4g %-10.3g %s\n", r.N, r.nu, r.m, r.eps_star, r.runtime,
                !r.error.empty() ? r.error.c_str() : (r.converged ? "ok" : "not converged"));
  std::printf("runtime slope vs m: %.3f\n", slope);
  return kExitOk;
}

int cmd_ingest(const std::string& net, const std::string& trips, double q, const std::vector<double>& sweep,
               const fs::path& out, bool report, const FlowFlags& flags, Manifest& man) {
  FlowConfig cfg = flags.resolve();
  auto rn = parse_tntp(net, trips);
  auto zc = lift_to_zones(rn, q);
  fs::path stem = out;
  stem.replace_extension();
  man.j["inputs"] = {net, trips};
  man.j["quantile"] = q;
  man.j["config"] = to_json(cfg);
  man.j["seed"] = nullptr;
  save_complex(out, zc.complex, zc.profile);
  write_atomic(stem.string() + ".provenance.json", dump_json(zone_provenance(zc, net, trips)));
  Json outputs = {out.filename().string(), stem.filename().string() + ".provenance.json"};
  auto b = betti_numbers(zc.complex);
  std::printf("zones %d  edges %d  triangles %d  beta1 %d\n", zc.complex.num_vertices(), zc.complex.num_edges(),
              zc.complex.num_triangles(), b.b1);
  if (!sweep.empty()) {
    std::string csv = "quantile,n,m,triangles,beta1\n";
    for (auto& r : quantile_sweep(rn, sweep)) {
      csv += CsvRow().add(r.quantile).add(r.n).add(r.m).add(r.triangles).add(r.b1).str();
      std::printf("q=%-5g n %d  m %d  triangles %d  beta1 %d\n", r.quantile, r.n, r.m, r.triangles, r.b1);
    }
    write_atomic(stem.string() + ".sweep.csv", csv);
    outputs.push_back(stem.filename().string() + ".sweep.csv");
  }
  int code = kExitOk;
  if (report) {
    auto rep = stability_report(zc, cfg);
    Json j = result_json(zc.complex, zc.profile, rep.result);
    Json hole = Json::array();
    for (auto& h : rep.new_hole) hole.push_back({{"edge", {h.edge[0], h.edge[1]}}, {"value", h.value}});
    j["new_hole"] = hole;
    j["notes"] = rep.notes;
    write_atomic(stem.string() + ".report.json", dump_json(j));
    write_atomic(stem.string() + ".trajectory.csv", trajectory_csv(rep.result.trajectory));
    outputs.push_back(stem.filename().string() + ".report.json");
    outputs.push_back(stem.filename().string() + ".trajectory.csv");
    std::printf("eps* %s  percentile %.4g  beta1 %d -> %d\n", format_double(rep.result.eps_star).c_str(),
                rep.percentile, rep.b1_before, rep.b1_after);
    for (auto& e : rep.eliminated)
      std::printf("eliminated [%lld,%lld]\n", static_cast<long long>(e[0]), static_cast<long long>(e[1]));
    for (auto& n : rep.notes) std::printf("note: %s\n", n.c_str());
    if (!rep.result.converged) code = kExitNotConverged;
  }
  man.j["outputs"] = outputs;
  man.write(stem.string() + ".manifest.json", code);
  return code;
}

int cmd_inspect(const std::string& input, bool as_json) {
  auto wc = load_complex(input);
  auto s = summarize(wc.complex, wc.profile);
  if (as_json) {
    std::fputs(dump_json(to_json(s)).c_str(), stdout);
    return kExitOk;
  }
  std::printf("n                     %d\n", s.n);
  std::printf("m                     %d\n", s.m);
  std::printf("triangles             %d\n", s.triangles);
  std::printf("beta0                 %d\n", s.b0);
  std::printf("beta1                 %d\n", s.b1);
  std::printf("mu2                   %s\n", format_double(s.mu2).c_str());
  std::printf("lambda_plus           %s\n", format_double(s.lambda_plus).c_str());
  std::printf("inheritance residual  %.3e\n", s.inheritance_residual);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Topological stability of weighted simplicial complexes"};
  app.set_version_flag("--version", HOLOSTAB_VERSION);
  app.require_subcommand(1);
  std::vector<std::string> args(argv, argv + argc);

  auto* st = app.add_subcommand("stability", "find the smallest perturbation that opens a new hole");
  std::string st_input;
  std::string st_out = ".";
  bool st_export = false;
  FlowFlags st_flags;
  st->add_option("complex", st_input, "complex JSON file")->required();
  st->add_option("--out-dir", st_out, "directory for result.json, trajectory.csv, manifest.json");
  st->add_flag("--export-matrices", st_export, "also write initial and final matrices in Matrix Market format");
  st_flags.attach(st);

  auto* be = app.add_subcommand("bench", "random planar benchmark");
  std::vector<int> be_n{16, 22, 28, 34, 40};
  std::vector<double> be_nu{0.35, 0.5};
  int be_rep = 3, be_threads = 0;
  std::uint64_t be_seed = 1;
  double be_lo = 0.25, be_hi = 0.75;
  bool be_no_inst = false;
  std::string be_out = "bench_out";
  FlowFlags be_flags;
  be->add_option("--n-list", be_n, "vertex counts")->delimiter(',');
  be->add_option("--nu-list", be_nu, "sparsities")->delimiter(',');
  be->add_option("--repeats", be_rep, "instances per (N, nu)")->check(CLI::PositiveNumber);
  be->add_option("--seed", be_seed, "generator seed");
  be->add_option("--weight-low", be_lo, "lower edge weight bound");
  be->add_option("--weight-high", be_hi, "upper edge weight bound");
  be->add_option("--threads", be_threads, "worker threads (default: HOLOSTAB_THREADS or all cores)");
  be->add_flag("--no-instances", be_no_inst, "skip writing per-instance complex files");
  be->add_option("--out-dir", be_out, "output directory");
  be_flags.attach(be);

  auto* in = app.add_subcommand("ingest", "build a zone complex from TNTP network and trips files");
  std::string in_net, in_trips, in_out;
  double in_q = 0.9;
  std::vector<double> in_sweep;
  bool in_report = false;
  FlowFlags in_flags;
  in->add_option("--net", in_net, "TNTP network file")->required();
  in->add_option("--trips", in_trips, "TNTP trips file")->required();
  in->add_option("--quantile", in_q, "keep zone pairs up to this quantile of travel time")
      ->check(CLI::Range(0.0, 1.0));
  in->add_option("--sweep", in_sweep, "also tabulate these quantiles")->delimiter(',');
  in->add_option("--out", in_out, "output complex JSON")->required();
  in->add_flag("--report", in_report, "run the stability search on the result");
  in_flags.attach(in);

  auto* ins = app.add_subcommand("inspect", "print sizes, Betti numbers and spectral quantities");
  std::string ins_input;
  bool ins_json = false;
  ins->add_option("complex", ins_input, "complex JSON file")->required();
  ins->add_flag("--json", ins_json, "print JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*st) {
      Manifest man("stability", args);
      return cmd_stability(st_input, st_out, st_export, st_flags, man);
    }
    if (*be) {
      Manifest man("bench", args);
      return cmd_bench(be_n, be_nu, be_rep, be_seed, be_lo, be_hi, be_threads, !be_no_inst, be_out, be_flags, man);
    }
    if (*in) {
      Manifest man("ingest", args);
      return cmd_ingest(in_net, in_trips, in_q, in_sweep, in_out, in_report, in_flags, man);
    }
    if (*ins) return cmd_inspect(ins_input, ins_json);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_for(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitSolver;
  }
  return kExitInput;
}
