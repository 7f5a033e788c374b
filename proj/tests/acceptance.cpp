// Acceptance run: one PASS/FAIL/SKIP line per criterion.
// Exit status is nonzero only with --strict and a FAIL, or on a crash.
#include "holostab/bench.hpp"
#include "holostab/flow.hpp"
#include "holostab/io.hpp"
#include "holostab/transport.hpp"
#include "support/checks.hpp"
#include "support/oracles.hpp"

#include <CLI11.hpp>
#include <Eigen/Dense>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

using namespace holostab;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

enum class Verdict { Pass, Fail, Skip };

struct Outcome {
  Verdict v = Verdict::Fail;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// trajectories from every flow run here, checked at the end
struct TrajectoryLog {
  long runs = 0, rows = 0;
  std::vector<std::string> violations;
  void add(const std::string& tag, const StabilityResult& r) {
    ++runs;
    rows += static_cast<long>(r.trajectory.size());
    auto v = oracle::trajectory_violation(r.trajectory);
    if (!v.empty()) violations.push_back(tag + " " + v);
  }
} g_traj;

// numerical rank of an integer matrix through full pivot LU
int float_rank(const Eigen::MatrixXi& A) {
  if (A.size() == 0) return 0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A.cast<double>());
  lu.setThreshold(1e-9);
  return static_cast<int>(lu.rank());
}

// hole count of the complex with the given edges gone, triangles on them dropped
int reduced_b1_oracle(const SimplicialComplex& c, const std::vector<int>& gone) {
  std::set<int> g(gone.begin(), gone.end());
  std::vector<Label> v = c.labels();
  std::vector<std::array<Label, 2>> e;
  for (int k = 0; k < c.num_edges(); ++k)
    if (!g.count(k)) e.push_back(c.edge_labels(k));
  std::vector<std::array<Label, 3>> t;
  for (int k = 0; k < c.num_triangles(); ++k) {
    bool ok = true;
    for (int f : c.triangle_faces(k)) ok &= !g.count(f);
    auto tr = c.triangles()[k];
    if (ok) t.push_back({c.labels()[tr[0]], c.labels()[tr[1]], c.labels()[tr[2]]});
  }
  auto r = build_complex(v, e, t);
  return r.num_edges() - float_rank(oracle::dense_b1(r)) - float_rank(oracle::dense_b2(r));
}

std::set<std::array<Label, 2>> labels_of(const SimplicialComplex& c, const std::vector<int>& edges) {
  std::set<std::array<Label, 2>> out;
  for (int e : edges) out.insert(c.edge_labels(e));
  return out;
}

Outcome c1_structure() {
  CounterRng rng(1001);
  double lib_time = 0;
  int bad = 0;
  std::string first;
  for (int r = 0; r < 200; ++r) {
    const int n = 3 + static_cast<int>(rng.below(28));
    auto c = oracle::random_complex(rng, n, rng.uniform(0.1, 0.5), 0.7);
    auto t0 = Clock::now();
    auto B1 = boundary_matrix(c, 1).entries;
    auto B2 = boundary_matrix(c, 2).entries;
    Eigen::SparseMatrix<int> P = B1 * B2;
    P.prune(0);
    auto b = betti_numbers(c);
    lib_time += seconds_since(t0);
    // independent side: dense maps, LU ranks, Hodge kernel
    Eigen::MatrixXi D1 = oracle::dense_b1(c), D2 = oracle::dense_b2(c);
    Eigen::MatrixXd L1 = (D1.transpose() * D1 + D2 * D2.transpose()).cast<double>();
    int ker = c.num_edges() ? static_cast<int>((oracle::dense_eigenvalues(L1).array() < 1e-8).count()) : 0;
    int r1 = float_rank(D1), r2 = float_rank(D2);
    bool ok = P.nonZeros() == 0 && Eigen::MatrixXi(B1) == D1 && Eigen::MatrixXi(B2) == D2 &&
              c.num_edges() == r2 + r1 + ker && b.rank_b1 == r1 && b.rank_b2 == r2 && b.b1 == ker &&
              c.num_edges() == b.rank_b2 + b.rank_b1 + b.b1;
    if (!ok && bad++ == 0) first = "complex " + std::to_string(r);
  }
  Outcome o;
  o.v = bad == 0 && lib_time < 10 ? Verdict::Pass : Verdict::Fail;
  o.detail = "200 complexes, " + std::to_string(bad) + " mismatches" + (first.empty() ? "" : " (first " + first + ")") +
             ", library time " + fmt("%.2f s", lib_time);
  return o;
}

Outcome c2_weight_invariance() {
  CounterRng rng(1002);
  int bad = 0;
  for (int r = 0; r < 50; ++r) {
    auto c = oracle::random_connected_complex(rng, 6 + static_cast<int>(rng.below(10)), 0.35, 0.6);
    auto p = WeightProfile::uniform(c);
    for (int e = 0; e < c.num_edges(); ++e) p.w1(e) = std::exp(rng.uniform(std::log(0.05), std::log(20.0)));
    for (int t = 0; t < c.num_triangles(); ++t) p.w2_init(t) = std::exp(rng.uniform(std::log(0.05), std::log(20.0)));
    p.rho = rng.uniform(0.5, 2.0);
    auto b = assemble(c, perturb(c, p, 0, Perturbation::zero(c.num_edges())));
    Eigen::MatrixXd L1 = Eigen::MatrixXd(b.L1_down) + Eigen::MatrixXd(b.L1_up);
    int ker = static_cast<int>((oracle::dense_eigenvalues(L1).array() < 1e-10).count());
    int comb = c.num_edges() - float_rank(oracle::dense_b1(c)) - float_rank(oracle::dense_b2(c));
    bad += ker != comb;
  }
  return {bad == 0 ? Verdict::Pass : Verdict::Fail, "50 reweightings, " + std::to_string(bad) + " kernel mismatches"};
}

Outcome c3_inheritance() {
  CounterRng rng(1003);
  double worst_val = 0, worst_vec = 0;
  int count_bad = 0;
  for (int r = 0; r < 50; ++r) {
    auto c = oracle::random_connected_complex(rng, 5 + static_cast<int>(rng.below(14)), 0.35, 0.6);
    auto p = oracle::random_weights(rng, c, 0.1, 3.0);
    p.rho = rng.uniform(0.5, 2.0);
    auto b = assemble(c, perturb(c, p, 0, Perturbation::zero(c.num_edges())));
    Eigen::MatrixXd B(b.B1_bar), L0(b.L0), Ld(b.L1_down);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e0(L0);
    auto ed = oracle::dense_eigenvalues(Ld);
    const double tol = 1e-10 * std::max(1.0, e0.eigenvalues().cwiseAbs().maxCoeff());
    std::vector<double> a, d;
    for (int i = 0; i < e0.eigenvalues().size(); ++i)
      if (e0.eigenvalues()(i) > tol) a.push_back(e0.eigenvalues()(i));
    for (int i = 0; i < ed.size(); ++i)
      if (ed(i) > tol) d.push_back(ed(i));
    if (a.size() != d.size()) {
      ++count_bad;
      continue;
    }
    for (std::size_t k = 0; k < a.size(); ++k) worst_val = std::max(worst_val, std::abs(a[k] - d[k]) / a[k]);
    for (int i = 0; i < e0.eigenvalues().size(); ++i) {
      double mu = e0.eigenvalues()(i);
      if (mu <= tol) continue;
      Eigen::VectorXd u = B.transpose() * e0.eigenvectors().col(i) / std::sqrt(mu);
      worst_vec = std::max({worst_vec, (Ld * u - mu * u).norm() / mu, std::abs(u.norm() - 1.0)});
    }
  }
  bool ok = count_bad == 0 && worst_val < 1e-8 && worst_vec < 1e-8;
  return {ok ? Verdict::Pass : Verdict::Fail, "50 complexes, max eigenvalue rel err " + fmt("%.2e", worst_val) +
                                                  ", max transport residual " + fmt("%.2e", worst_vec) +
                                                  (count_bad ? ", count mismatch on " + std::to_string(count_bad) : "")};
}

// away from min-ratio ties and the ratio == 1 kink
bool smooth_point(const SimplicialComplex& c, const WeightProfile& p, double eps, const Eigen::VectorXd& E) {
  for (int t = 0; t < c.num_triangles(); ++t) {
    std::array<double, 3> r;
    for (int k = 0; k < 3; ++k) {
      int e = c.triangle_faces(t)[k];
      r[k] = (p.w1(e) + eps * E(e)) / p.w1(e);
    }
    std::sort(r.begin(), r.end());
    if (std::abs(r[0] - 1.0) < 1e-3) return false;
    if (r[0] < 1.0 && r[1] - r[0] < 1e-3) return false;
  }
  return true;
}

Outcome c4_gradient() {
  auto t0 = Clock::now();
  CounterRng rng(1004);
  SolverConfig dense;
  dense.mode = SolverMode::Dense;
  int done = 0, skipped = 0;
  double worst = 0;
  for (int tries = 0; done < 20 && tries < 1000; ++tries) {
    auto c = oracle::random_connected_complex(rng, 7 + static_cast<int>(rng.below(5)), 0.5, 0.6);
    if (c.num_triangles() == 0) continue;
    auto p = oracle::random_weights(rng, c);
    const int m = c.num_edges();
    Eigen::VectorXd E(m);
    for (int e = 0; e < m; ++e) E(e) = rng.normal();
    E = rng.uniform(0.3, 1.0) * E.normalized();
    double eps = rng.uniform(0.2, 0.8) * p.w1.minCoeff();
    if (!smooth_point(c, p, eps, E)) {
      ++skipped;
      continue;
    }
    Evaluator ev(c, p, dense);
    auto pt = ev.evaluate(eps, Perturbation(E));
    if (pt.lambda.gap < 1e-3 * pt.lambda.value || pt.mu.gap < 1e-3 * pt.mu.value) {
      ++skipped;
      continue;
    }
    FunctionalParams fp;
    fp.alpha = rng.uniform(0.5, 5.0);
    fp.mu_bar = pt.mu.value * (done % 2 ? 1.5 : 0.5);
    auto g = ev.gradient(pt, fp);
    Eigen::VectorXd fd(m);
    const double h = 1e-5;
    for (int e = 0; e < m; ++e) {
      Eigen::VectorXd a = E, b = E;
      a(e) += h;
      b(e) -= h;
      fd(e) = (oracle::dense_functional(c, p, eps, a, fp.alpha, fp.mu_bar) -
               oracle::dense_functional(c, p, eps, b, fp.alpha, fp.mu_bar)) /
              (2 * h);
    }
    if (fd.norm() == 0) continue;
    worst = std::max(worst, (g.G - fd).norm() / fd.norm());
    ++done;
  }
  double t = seconds_since(t0);
  bool ok = done == 20 && worst < 1e-5 && t < 30;
  return {ok ? Verdict::Pass : Verdict::Fail, std::to_string(done) + " points (" + std::to_string(skipped) +
                                                  " tie/boundary points skipped), max rel err " + fmt("%.2e", worst) +
                                                  ", " + fmt("%.2f s", t)};
}

Outcome c5_illustrative() {
  auto c = oracle::illustrative();
  auto p = oracle::illustrative_weights(c);
  auto t0 = Clock::now();
  auto r = run_stability(c, p, FlowConfig{});
  double t = seconds_since(t0);
  g_traj.add("illustrative", r);
  const double w56 = p.w1(*c.edge_index(*c.vertex_index(5), *c.vertex_index(6)));
  int b1 = reduced_b1_oracle(c, r.eliminated);
  bool ok = r.converged && labels_of(c, r.eliminated) == std::set<std::array<Label, 2>>{{5, 6}} &&
            std::abs(r.eps_star - w56) <= 0.05 * w56 && b1 == 2 && t < 10;
  return {ok ? Verdict::Pass : Verdict::Fail, "eps* " + format_double(r.eps_star) + " vs w1(5,6) " +
                                                  format_double(w56) + ", eliminated " +
                                                  std::to_string(r.eliminated.size()) + " edge(s), reduced beta1 " +
                                                  std::to_string(b1) + ", " + fmt("%.2f s", t)};
}

Outcome c6_pollution(const fs::path& samples) {
  std::string detail;
  bool ok = true;
  for (const char* f : {"pollution_0p2.json", "pollution_0p1.json"}) {
    auto wc = load_complex(samples / f);
    const auto& c = wc.complex;
    auto r = run_stability(c, wc.profile, FlowConfig{});
    g_traj.add(f, r);
    auto el = labels_of(c, r.eliminated);
    bool polluted = el == std::set<std::array<Label, 2>>{{2, 4}, {3, 5}};
    int b1 = reduced_b1_oracle(c, r.eliminated);
    bool verified = !r.converged || b1 > betti_numbers(c).b1;
    ok &= !polluted && verified;
    detail += std::string(detail.empty() ? "" : "; ") + f + ": " + (r.converged ? "converged" : "not converged") +
              ", alpha " + format_double(r.alpha) + ", " + std::to_string(r.eliminated.size()) +
              " eliminated, reduced beta1 " + std::to_string(b1) + (polluted ? ", POLLUTED" : "");
  }
  return {ok ? Verdict::Pass : Verdict::Fail, detail};
}

Outcome c8_solvers() {
  // (a) eigenvalues at random admissible points
  CounterRng rng(1008);
  SolverConfig iter;
  iter.mode = SolverMode::Iterative;
  int checked = 0;
  double worst = 0;
  long lsqr = 0;
  for (int k = 0; checked < 50 && k < 500; ++k) {
    BenchSpec s;
    s.N = 10 + static_cast<int>(rng.below(14));
    s.nu = rng.uniform(0.3, 0.55);
    s.seed = 8000 + static_cast<std::uint64_t>(k);
    auto inst = generate(s, 0);
    const auto& c = inst.complex;
    if (c.num_edges() > 120 || c.num_triangles() == 0) continue;
    Eigen::VectorXd E(c.num_edges());
    for (int e = 0; e < E.size(); ++e) E(e) = rng.uniform(-1, 1);
    E.normalize();
    double eps = rng.uniform(0.1, 0.9) * inst.profile.w1.minCoeff();
    Evaluator ev(c, inst.profile, iter);
    auto pt = ev.evaluate(eps, Perturbation(E));
    lsqr += ev.stats().lsqr_iterations;
    auto ref = oracle::dense_spectra(c, inst.profile, eps, E);
    worst = std::max({worst, std::abs(pt.lambda.value - ref.lambda_plus) / ref.lambda_plus,
                      std::abs(pt.mu.value - ref.mu2) / ref.mu2});
    ++checked;
  }
  bool ok_a = checked == 50 && worst < 1e-6 && lsqr > 0;

  // (b) preconditioner effect on benchmark instances with m >= 60
  int wins = 0, total = 0;
  std::string rows;
  for (double nu : {0.35, 0.5})
    for (int N : {16, 22})
      for (int r = 0; r < 3; ++r) {
        BenchSpec s;
        s.N = N;
        s.nu = nu;
        auto inst = generate(s, r);
        if (inst.complex.num_edges() < 60) continue;
        FlowConfig a, b;
        a.solver.mode = b.solver.mode = SolverMode::Iterative;
        b.solver.precond = PrecondKind::Ichol;
        std::string tag = "N" + std::to_string(N) + "/nu" + fmt("%.2f", nu) + "/r" + std::to_string(r);
        long la = -1, lb = -1;
        try {
          auto ra = run_stability(inst.complex, inst.profile, a);
          g_traj.add(tag + " none", ra);
          la = ra.stats.lsqr_iterations;
          auto rb = run_stability(inst.complex, inst.profile, b);
          g_traj.add(tag + " ichol", rb);
          lb = rb.stats.lsqr_iterations;
        } catch (const Error& e) {
          std::fprintf(stderr, "  %s: %s\n", tag.c_str(), e.what());
        }
        ++total;
        wins += la >= 0 && lb >= 0 && lb < la;
        std::fprintf(stderr, "  %s m=%d lsqr none %ld ichol %ld\n", tag.c_str(), inst.complex.num_edges(), la, lb);
      }
  double rate = total ? static_cast<double>(wins) / total : 0.0;
  bool ok_b = total > 0 && rate >= 0.8;
  return {ok_a && ok_b ? Verdict::Pass : Verdict::Fail,
          "(a) " + std::to_string(checked) + " instances, max rel err " + fmt("%.2e", worst) + (ok_a ? " ok" : " FAIL") +
              "; (b) ichol fewer lsqr iterations on " + std::to_string(wins) + "/" + std::to_string(total) + " (" +
              fmt("%.0f%%", 100 * rate) + ", need 80%)" + (ok_b ? " ok" : " FAIL")};
}

Outcome c9_scaling() {
  auto t0 = Clock::now();
  std::vector<BenchRecord> rows;
  std::map<double, std::map<int, std::vector<double>>> eps;
  int failed = 0;
  for (double nu : {0.35, 0.5})
    for (int N : {16, 22, 28, 34, 40})
      for (int r = 0; r < 3; ++r) {
        BenchSpec s;
        s.N = N;
        s.nu = nu;
        auto inst = generate(s, r);
        BenchRecord rec;
        rec.N = N;
        rec.nu = nu;
        rec.m = inst.complex.num_edges();
        try {
          auto res = run_stability(inst.complex, inst.profile, FlowConfig{});
          g_traj.add("bench N" + std::to_string(N) + " r" + std::to_string(r), res);
          rec.runtime = res.runtime_seconds;
          rec.converged = res.converged;
          rec.eps_star = res.eps_star;
        } catch (const Error& e) {
          std::fprintf(stderr, "  bench N%d nu%.2f r%d: %s\n", N, nu, r, e.what());
        }
        failed += !rec.converged;
        if (rec.converged) eps[nu][N].push_back(rec.eps_star);
        std::fprintf(stderr, "  N=%d nu=%.2f r=%d m=%d eps*=%.4f t=%.2fs%s\n", N, nu, r, rec.m, rec.eps_star,
                     rec.runtime, rec.converged ? "" : " not converged");
        rows.push_back(rec);
      }
  double slope = runtime_slope(rows);
  std::string med;
  bool mono = true;
  for (auto& [nu, byN] : eps) {
    double prev = -1;
    med += fmt(" nu=%.2f:", nu);
    for (auto& [N, v] : byN) {
      std::sort(v.begin(), v.end());
      double m = v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
      med += fmt(" %.3f", m);
      mono &= m >= prev;
      prev = m;
    }
  }
  double t = seconds_since(t0);
  bool ok = slope >= 1.5 && slope <= 3.5 && mono && t < 1800 && failed == 0;
  return {ok ? Verdict::Pass : Verdict::Fail, "slope " + fmt("%.3f", slope) + ", median eps*" + med +
                                                  (mono ? " (non-decreasing)" : " (NOT monotone)") + ", " +
                                                  std::to_string(failed) + " not converged, " + fmt("%.0f s", t)};
}

Outcome c10_cheeger() {
  CounterRng rng(1010);
  SolverConfig dense;
  dense.mode = SolverMode::Dense;
  int bad = 0;
  double min_lo = 1e300, min_hi = 1e300;
  for (int r = 0; r < 100; ++r) {
    const int n = 3 + static_cast<int>(rng.below(10));
    auto c = oracle::random_connected_complex(rng, n, rng.uniform(0.1, 0.6), 0.0);
    auto p = oracle::random_weights(rng, c, 0.05, 3.0);
    p.rho = rng.uniform(0.2, 2.0);
    auto pw = perturb(c, p, 0, Perturbation::zero(c.num_edges()));
    auto b = assemble(c, pw);
    double mu2 = smallest_nonzero_eig(b.L0, 1, dense).value;
    double h = oracle::cheeger_brute(n, c.edges(), pw.w1_tilde, pw.w0_tilde);
    Eigen::VectorXd deg = Eigen::VectorXd::Zero(n);
    for (int e = 0; e < c.num_edges(); ++e) {
      deg(c.edges()[e][0]) += p.w1(e);
      deg(c.edges()[e][1]) += p.w1(e);
    }
    double ratio = (deg.array() / pw.w0_tilde.array()).maxCoeff();
    double hi = std::sqrt(2 * mu2 * ratio);
    min_lo = std::min(min_lo, h - 0.5 * mu2);
    min_hi = std::min(min_hi, hi - h);
    bad += !(0.5 * mu2 <= h + 1e-12 && h <= hi + 1e-12);
  }
  return {bad == 0 ? Verdict::Pass : Verdict::Fail, "100 graphs, " + std::to_string(bad) + " violations, min slack " +
                                                        fmt("%.2e", min_lo) + " / " + fmt("%.2e", min_hi)};
}

struct NetworkRow {
  const char* name;
  int n, m, triangles;
  double eps;
};

std::optional<std::pair<fs::path, fs::path>> find_network(const fs::path& dir, const std::string& name) {
  std::string key;
  for (char ch : name) key += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  std::optional<fs::path> net, trips;
  std::error_code ec;
  for (auto it = fs::recursive_directory_iterator(dir, ec); !ec && it != fs::recursive_directory_iterator();
       it.increment(ec)) {
    std::string f;
    for (char ch : it->path().filename().string()) f += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (f == key + "_net.tntp") net = it->path();
    if (f == key + "_trips.tntp") trips = it->path();
  }
  if (net && trips) return std::make_pair(*net, *trips);
  return std::nullopt;
}

Outcome c11_transport(const fs::path& source_dir) {
  fs::path dir;
  if (const char* env = std::getenv("HOLOSTAB_TNTP_DIR")) dir = env;
  else dir = source_dir / "data" / "tntp";
  if (!fs::is_directory(dir)) return {Verdict::Skip, "no TNTP data (set HOLOSTAB_TNTP_DIR or add data/tntp)"};
  static const NetworkRow table[] = {
      {"Anaheim", 38, 159, 221, 0.57},
      {"Berlin-Tiergarten", 26, 63, 55, 1.18},
      {"Berlin-Mitte-Center", 98, 456, 900, 0.887},
  };
  auto ana = find_network(dir, "Anaheim");
  if (!ana) return {Verdict::Skip, "Anaheim files not found under " + dir.string()};
  std::string detail;
  bool ok = true;
  auto rn = parse_tntp(ana->first, ana->second);
  auto zc = lift_to_zones(rn, 1.0);
  ok &= zc.complex.num_vertices() == 38;
  detail = "Anaheim zones " + std::to_string(zc.complex.num_vertices());
  std::vector<double> qs;
  for (int k = 1; k <= 200; ++k) qs.push_back(k / 200.0);
  bool matched = false, eps_ok = false;
  for (const auto& row : table) {
    auto files = find_network(dir, row.name);
    if (!files) continue;
    auto net = parse_tntp(files->first, files->second);
    auto best = best_match(quantile_sweep(net, qs), row.n, row.m, row.triangles);
    detail += std::string("; ") + row.name + " best q " + fmt("%.3f", best.quantile) + " (m " + std::to_string(best.m) +
              ", triangles " + std::to_string(best.triangles) + ")";
    if (best.n != row.n || best.m != row.m || best.triangles != row.triangles) continue;
    matched = true;
    auto rep = stability_report(lift_to_zones(net, best.quantile), FlowConfig{});
    g_traj.add(row.name, rep.result);
    bool close = rep.result.converged && std::abs(rep.result.eps_star - row.eps) <= 0.25 * row.eps;
    eps_ok |= close;
    detail += ", eps* " + format_double(rep.result.eps_star) + " vs " + format_double(row.eps);
  }
  ok &= matched && eps_ok;
  return {ok ? Verdict::Pass : Verdict::Fail, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  bool strict = false;
  std::vector<int> only;
  std::string report;
  app.add_flag("--strict", strict, "exit 1 when any criterion fails");
  app.add_option("--report", report, "also write the verdict lines to this file");
  app.add_option("--only", only, "run only these criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const fs::path samples = HOLOSTAB_SAMPLES_DIR;
  const fs::path source = HOLOSTAB_SOURCE_DIR;
  std::map<int, std::function<Outcome()>> checks{
      {1, c1_structure},
      {2, c2_weight_invariance},
      {3, c3_inheritance},
      {4, c4_gradient},
      {5, c5_illustrative},
      {6, [&] { return c6_pollution(samples); }},
      {8, c8_solvers},
      {9, c9_scaling},
      {10, c10_cheeger},
      {11, [&] { return c11_transport(source); }},
  };
  auto want = [&](int k) { return only.empty() || std::find(only.begin(), only.end(), k) != only.end(); };
  std::map<int, Outcome> out;
  for (auto& [k, f] : checks) {
    if (!want(k)) continue;
    std::fprintf(stderr, "criterion %d ...\n", k);
    auto t0 = Clock::now();
    try {
      out[k] = f();
    } catch (const std::exception& e) {
      out[k] = {Verdict::Fail, std::string("exception: ") + e.what()};
    }
    std::fprintf(stderr, "criterion %d done in %.1f s\n", k, seconds_since(t0));
  }
  if (want(7)) {
    Outcome o;
    o.v = g_traj.runs > 0 && g_traj.violations.empty() ? Verdict::Pass : Verdict::Fail;
    o.detail = std::to_string(g_traj.runs) + " flows, " + std::to_string(g_traj.rows) + " trajectory rows, " +
               std::to_string(g_traj.violations.size()) + " violations";
    if (!g_traj.violations.empty()) o.detail += " (first: " + g_traj.violations.front() + ")";
    out[7] = o;
  }
  int fails = 0;
  std::string lines;
  for (auto& [k, o] : out) {
    const char* tag = o.v == Verdict::Pass ? "PASS" : o.v == Verdict::Skip ? "SKIP" : "FAIL";
    fails += o.v == Verdict::Fail;
    char head[32];
    std::snprintf(head, sizeof head, "criterion %2d: %s  ", k, tag);
    lines += head + o.detail + "\n";
  }
  std::fputs(lines.c_str(), stdout);
  std::fflush(stdout);
  if (!report.empty()) write_atomic(report, lines);
  return strict && fails ? 1 : 0;
}
