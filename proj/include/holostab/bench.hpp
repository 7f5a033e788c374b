#pragma once

#include "holostab/complex.hpp"
#include "holostab/error.hpp"
#include "holostab/flow.hpp"
#include "holostab/io.hpp"
#include "holostab/parallel.hpp"
#include "holostab/rng.hpp"
#include "holostab/weights.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <string>
#include <vector>

namespace holostab {

struct Point2 {
  double x = 0, y = 0;
};

namespace detail {

inline double orient(const Point2& a, const Point2& b, const Point2& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

// > 0 when d lies strictly inside the circumcircle of ccw (a, b, c)
inline double in_circle(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  double adx = a.x - d.x, ady = a.y - d.y;
  double bdx = b.x - d.x, bdy = b.y - d.y;
  double cdx = c.x - d.x, cdy = c.y - d.y;
  double ad = adx * adx + ady * ady, bd = bdx * bdx + bdy * bdy, cd = cdx * cdx + cdy * cdy;
  return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

}  // namespace detail

// any three points within tol of a common line
inline bool has_collinear_triple(const std::vector<Point2>& p, double tol = 1e-12) {
  const int n = static_cast<int>(p.size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k)
        if (std::abs(detail::orient(p[i], p[j], p[k])) <= tol) return true;
  return false;
}

// Bowyer-Watson. Returns triangles as ccw index triples.
inline std::vector<std::array<int, 3>> delaunay_triangles(const std::vector<Point2>& pts) {
  const int n = static_cast<int>(pts.size());
  if (n < 3) return {};
  double minx = pts[0].x, maxx = pts[0].x, miny = pts[0].y, maxy = pts[0].y;
  for (auto& q : pts) {
    minx = std::min(minx, q.x);
    maxx = std::max(maxx, q.x);
    miny = std::min(miny, q.y);
    maxy = std::max(maxy, q.y);
  }
  const double span = std::max({maxx - minx, maxy - miny, 1e-12});
  const double cx = 0.5 * (minx + maxx), cy = 0.5 * (miny + maxy);
  std::vector<Point2> P = pts;
  P.push_back({cx - 20 * span, cy - 10 * span});
  P.push_back({cx + 20 * span, cy - 10 * span});
  P.push_back({cx, cy + 20 * span});

  std::vector<std::array<int, 3>> tris{{n, n + 1, n + 2}};
  for (int v = 0; v < n; ++v) {
    std::vector<std::array<int, 3>> keep;
    std::vector<std::array<int, 2>> boundary;
    std::vector<std::array<int, 3>> bad;
    for (auto& t : tris)
      if (detail::in_circle(P[t[0]], P[t[1]], P[t[2]], P[v]) > 0) bad.push_back(t);
      else keep.push_back(t);
    // cavity boundary: edges of bad triangles not shared by two of them
    for (auto& t : bad)
      for (int k = 0; k < 3; ++k) {
        std::array<int, 2> e{t[k], t[(k + 1) % 3]};
        bool shared = false;
        for (auto& u : bad) {
          if (&u == &t) continue;
          for (int q = 0; q < 3; ++q)
            if (u[q] == e[1] && u[(q + 1) % 3] == e[0]) shared = true;
        }
        if (!shared) boundary.push_back(e);
      }
    for (auto& e : boundary) keep.push_back({e[0], e[1], v});
    tris = std::move(keep);
  }
  std::vector<std::array<int, 3>> out;
  for (auto& t : tris)
    if (t[0] < n && t[1] < n && t[2] < n) out.push_back(t);
  return out;
}

inline std::vector<std::array<int, 2>> delaunay_edges(const std::vector<Point2>& pts) {
  std::set<std::array<int, 2>> s;
  for (auto& t : delaunay_triangles(pts))
    for (int k = 0; k < 3; ++k) {
      int a = t[k], b = t[(k + 1) % 3];
      s.insert({std::min(a, b), std::max(a, b)});
    }
  return {s.begin(), s.end()};
}

struct BenchSpec {
  int N = 16;
  double nu = 0.35;
  std::uint64_t seed = 1;
  int repeats = 1;
  double weight_low = 0.25;
  double weight_high = 0.75;

  void validate() const {
    if (N < 4) throw Error(ErrorCode::InvalidArgument, "N must be at least 4");
    if (!(nu > 0) || nu > 1) throw Error(ErrorCode::InvalidArgument, "nu must lie in (0, 1]");
    if (!(weight_low < weight_high) || !(weight_low > 0))
      throw Error(ErrorCode::InvalidArgument, "weight bounds");
    if (repeats < 1) throw Error(ErrorCode::InvalidArgument, "repeats must be positive");
  }
};

struct BenchInstance {
  SimplicialComplex complex;
  WeightProfile profile;
  std::vector<Point2> points;
  int resamples = 0;           // point sets rejected as degenerate
  int delaunay_edges = 0;
  bool disconnected = false;   // connectivity could not be preserved
};

inline long target_edges(int N, double nu) {
  return std::lround(nu * N * (N - 1) / 2.0);
}

// Builds the instance from given points; graph edits and weights use rng.
inline BenchInstance instance_from_points(const std::vector<Point2>& pts, double nu, CounterRng& rng,
                                          double lo = 0.25, double hi = 0.75) {
  const int N = static_cast<int>(pts.size());
  BenchInstance inst;
  inst.points = pts;
  auto del = delaunay_edges(pts);
  inst.delaunay_edges = static_cast<int>(del.size());
  std::set<std::array<int, 2>> edges(del.begin(), del.end());
  const long target = target_edges(N, nu);

  auto connected_without = [&](const std::array<int, 2>& drop) {
    std::vector<Edge> es;
    for (auto& e : edges)
      if (e != drop) es.push_back({e[0], e[1]});
    return count_components(N, es) == 1;
  };
  while (static_cast<long>(edges.size()) > target) {
    std::vector<std::array<int, 2>> list(edges.begin(), edges.end());
    bool removed = false;
    for (int attempt = 0; attempt < 100 && !removed; ++attempt) {
      auto e = list[rng.below(list.size())];
      if (connected_without(e)) {
        edges.erase(e);
        removed = true;
      }
    }
    if (!removed) {
      edges.erase(list[rng.below(list.size())]);
      inst.disconnected = true;
    }
  }
  while (static_cast<long>(edges.size()) < target) {
    int a = static_cast<int>(rng.below(N)), b = static_cast<int>(rng.below(N));
    if (a == b) continue;
    edges.insert({std::min(a, b), std::max(a, b)});
  }

  std::vector<Label> labels(N);
  for (int i = 0; i < N; ++i) labels[i] = i + 1;
  std::vector<Edge> el;
  for (auto& e : edges) el.push_back({e[0], e[1]});
  inst.complex = build_complex_indexed(labels, el, std::nullopt);
  inst.profile = WeightProfile::uniform(inst.complex);
  for (int e = 0; e < inst.complex.num_edges(); ++e) inst.profile.w1(e) = rng.uniform(lo, hi);
  return inst;
}

// instance r of a spec; stream r keeps repeats independent of each other
inline BenchInstance generate(const BenchSpec& spec, int r = 0) {
  spec.validate();
  CounterRng rng(spec.seed, static_cast<std::uint64_t>(r) * 0x10000 + static_cast<std::uint64_t>(spec.N));
  std::vector<Point2> pts(spec.N);
  int resamples = 0;
  for (;;) {
    for (auto& q : pts) q = {rng.uniform(), rng.uniform()};
    if (!has_collinear_triple(pts)) break;
    if (++resamples > 1000) throw Error(ErrorCode::DegenerateConfiguration, "could not sample points");
  }
  auto inst = instance_from_points(pts, spec.nu, rng, spec.weight_low, spec.weight_high);
  inst.resamples = resamples;
  return inst;
}

struct BenchRecord {
  int N = 0;
  double nu = 0;
  std::uint64_t seed = 0;
  int instance = 0;
  int m = 0;
  int triangles = 0;
  int b1_before = 0, b1_after = 0;
  double runtime = 0;
  double eps_star = 0;
  int eliminated = 0;
  bool precond = false;
  bool converged = false;
  long lsqr_iterations = 0;
  long evaluations = 0;
  std::string error;
};

struct BenchReport {
  std::vector<BenchRecord> rows;
  std::string to_csv(bool with_runtime = true) const;
};

inline BenchRecord run_instance(const BenchSpec& spec, int r, const FlowConfig& cfg) {
  BenchRecord rec;
  rec.N = spec.N;
  rec.nu = spec.nu;
  rec.seed = spec.seed;
  rec.instance = r;
  rec.precond = cfg.solver.precond == PrecondKind::Ichol;
  try {
    auto inst = generate(spec, r);
    rec.m = inst.complex.num_edges();
    rec.triangles = inst.complex.num_triangles();
    auto res = run_stability(inst.complex, inst.profile, cfg);
    rec.b1_before = res.betti_before.b1;
    rec.b1_after = res.betti_after.b1;
    rec.runtime = res.runtime_seconds;
    rec.eps_star = res.eps_star;
    rec.eliminated = static_cast<int>(res.eliminated.size());
    rec.converged = res.converged;
    rec.lsqr_iterations = res.stats.lsqr_iterations;
    rec.evaluations = res.stats.evaluations;
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  return rec;
}

inline BenchReport run_benchmark(const std::vector<BenchSpec>& specs, const FlowConfig& cfg, int threads = 0) {
  struct Job {
    const BenchSpec* spec;
    int r;
  };
  std::vector<Job> jobs;
  for (auto& s : specs) {
    s.validate();
    for (int r = 0; r < s.repeats; ++r) jobs.push_back({&s, r});
  }
  BenchReport rep;
  rep.rows.resize(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t k) { rep.rows[k] = run_instance(*jobs[k].spec, jobs[k].r, cfg); }, threads);
  return rep;
}

inline std::string BenchReport::to_csv(bool with_runtime) const {
  std::string out = "N,nu,seed,instance,m,triangles,b1_before,b1_after,";
  if (with_runtime) out += "runtime_seconds,";
  out += "eps_star,eliminated,precond,converged,lsqr_iterations,evaluations,error\n";
  for (auto& r : rows) {
    CsvRow row;
    row.add(r.N).add(r.nu).add(r.seed).add(r.instance).add(r.m).add(r.triangles).add(r.b1_before).add(r.b1_after);
    if (with_runtime) row.add(r.runtime);
    row.add(r.eps_star).add(r.eliminated).add(r.precond ? "ichol" : "none").add(r.converged ? 1 : 0);
    row.add(r.lsqr_iterations).add(r.evaluations).add(r.error);
    out += row.str();
  }
  return out;
}

// least-squares slope of log(runtime) against log(m) over converged rows
inline double runtime_slope(const std::vector<BenchRecord>& rows) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int k = 0;
  for (auto& r : rows) {
    if (!r.error.empty() || r.runtime <= 0 || r.m <= 0) continue;
    double x = std::log(static_cast<double>(r.m)), y = std::log(r.runtime);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++k;
  }
  if (k < 2) return std::nan("");
  double den = k * sxx - sx * sx;
  return den == 0 ? std::nan("") : (k * sxy - sx * sy) / den;
}

}  // namespace holostab
