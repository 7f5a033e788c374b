#include "holostab/bench.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace holostab;

namespace {

std::vector<Point2> random_points(CounterRng& rng, int n) {
  std::vector<Point2> p(n);
  for (auto& q : p) q = {rng.uniform(), rng.uniform()};
  return p;
}

// every triple whose circumcircle holds no other point
std::set<std::array<int, 3>> brute_delaunay(const std::vector<Point2>& p) {
  const int n = static_cast<int>(p.size());
  std::set<std::array<int, 3>> out;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        double ax = p[i].x, ay = p[i].y, bx = p[j].x, by = p[j].y, cx = p[k].x, cy = p[k].y;
        double d = 2 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by));
        if (std::abs(d) < 1e-14) continue;
        double ux = ((ax * ax + ay * ay) * (by - cy) + (bx * bx + by * by) * (cy - ay) + (cx * cx + cy * cy) * (ay - by)) / d;
        double uy = ((ax * ax + ay * ay) * (cx - bx) + (bx * bx + by * by) * (ax - cx) + (cx * cx + cy * cy) * (bx - ax)) / d;
        double r2 = (ax - ux) * (ax - ux) + (ay - uy) * (ay - uy);
        bool empty = true;
        for (int q = 0; q < n && empty; ++q) {
          if (q == i || q == j || q == k) continue;
          double dd = (p[q].x - ux) * (p[q].x - ux) + (p[q].y - uy) * (p[q].y - uy);
          if (dd < r2 * (1 - 1e-12)) empty = false;
        }
        if (empty) out.insert({i, j, k});
      }
  return out;
}

}  // namespace

TEST(Delaunay, SquareCorners) {
  std::vector<Point2> p{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  EXPECT_EQ(delaunay_edges(p).size(), 5u);
  EXPECT_EQ(delaunay_triangles(p).size(), 2u);
}

TEST(Delaunay, MatchesBruteForce) {
  CounterRng rng(31);
  for (int n : {5, 8, 12, 20, 30}) {
    for (int r = 0; r < 4; ++r) {
      auto p = random_points(rng, n);
      if (has_collinear_triple(p)) continue;
      std::set<std::array<int, 3>> got;
      for (auto t : delaunay_triangles(p)) {
        std::sort(t.begin(), t.end());
        got.insert(t);
      }
      EXPECT_EQ(got, brute_delaunay(p)) << "n=" << n;
    }
  }
}

TEST(Bench, ExactEdgeCount) {
  for (int N : {16, 22, 28}) {
    for (double nu : {0.2, 0.35, 0.5}) {
      BenchSpec s;
      s.N = N;
      s.nu = nu;
      auto inst = generate(s, 0);
      EXPECT_EQ(inst.complex.num_edges(), target_edges(N, nu));
      for (auto& e : inst.complex.edges()) EXPECT_LT(e[0], e[1]);
      std::set<Edge> u(inst.complex.edges().begin(), inst.complex.edges().end());
      EXPECT_EQ(u.size(), inst.complex.edges().size());
      EXPECT_FALSE(inst.disconnected);
      EXPECT_EQ(count_components(N, inst.complex.edges()), 1);
    }
  }
}

TEST(Bench, DropTwoFromDelaunay) {
  CounterRng rng(8);
  auto p = random_points(rng, 8);
  ASSERT_FALSE(has_collinear_triple(p));
  auto del = delaunay_edges(p);
  double nu = (del.size() - 2) / 28.0;
  ASSERT_EQ(target_edges(8, nu), static_cast<long>(del.size()) - 2);
  CounterRng r2(9);
  auto inst = instance_from_points(p, nu, r2);
  EXPECT_EQ(inst.complex.num_edges(), static_cast<int>(del.size()) - 2);
  std::set<std::array<int, 2>> ds(del.begin(), del.end());
  for (auto& e : inst.complex.edges()) EXPECT_TRUE(ds.count({e[0], e[1]}));
}

TEST(Bench, Deterministic) {
  BenchSpec s;
  s.N = 22;
  s.nu = 0.5;
  s.seed = 5;
  auto a = generate(s, 1), b = generate(s, 1), c = generate(s, 2);
  EXPECT_EQ(a.complex.edges(), b.complex.edges());
  EXPECT_EQ(a.profile.w1, b.profile.w1);
  EXPECT_NE(a.profile.w1, c.profile.w1);
  for (int e = 0; e < a.profile.w1.size(); ++e) {
    EXPECT_GE(a.profile.w1(e), 0.25);
    EXPECT_LE(a.profile.w1(e), 0.75);
  }
}

TEST(Bench, PreconditionerDoesNotChangeOptimum) {
  BenchSpec s;
  s.N = 16;
  s.nu = 0.5;
  auto inst = generate(s, 0);
  // only meaningful where the optimum survives weight changes at solver-tolerance level
  double base = run_stability(inst.complex, inst.profile, FlowConfig{}).eps_star;
  for (double d : {1e-9, -1e-9}) {
    auto p = inst.profile;
    for (int e = 0; e < p.w1.size(); ++e) p.w1(e) *= 1 + d * std::sin(e + 1.0);
    ASSERT_NEAR(run_stability(inst.complex, p, FlowConfig{}).eps_star, base, 1e-9);
  }
  FlowConfig a, b;
  a.solver.mode = b.solver.mode = SolverMode::Iterative;
  b.solver.precond = PrecondKind::Ichol;
  auto ra = run_instance(s, 0, a), rb = run_instance(s, 0, b);
  ASSERT_TRUE(ra.error.empty()) << ra.error;
  ASSERT_TRUE(rb.error.empty()) << rb.error;
  EXPECT_TRUE(ra.converged);
  EXPECT_NEAR(ra.eps_star, base, 1e-6);
  EXPECT_NEAR(ra.eps_star, rb.eps_star, 1e-6);
  EXPECT_TRUE(rb.precond);
}

TEST(Bench, CsvIsReproducible) {
  BenchSpec s;
  s.N = 16;
  s.nu = 0.35;
  s.repeats = 2;
  auto a = run_benchmark({s}, FlowConfig{}, 1);
  auto b = run_benchmark({s}, FlowConfig{}, 2);
  ASSERT_EQ(a.rows.size(), 2u);
  EXPECT_EQ(a.to_csv(false), b.to_csv(false));
  EXPECT_NE(a.to_csv(true).find("runtime_seconds"), std::string::npos);
}

TEST(Bench, SlopeOfPowerLaw) {
  std::vector<BenchRecord> rows;
  for (int m : {40, 80, 160, 320}) {
    BenchRecord r;
    r.m = m;
    r.runtime = 1e-6 * std::pow(m, 2.5);
    rows.push_back(r);
  }
  EXPECT_NEAR(runtime_slope(rows), 2.5, 1e-12);
  rows.resize(1);
  EXPECT_TRUE(std::isnan(runtime_slope(rows)));
}

TEST(Bench, InvalidSpec) {
  BenchSpec s;
  s.nu = 0;
  EXPECT_THROW(generate(s), Error);
  s.nu = 0.3;
  s.N = 3;
  EXPECT_THROW(generate(s), Error);
}
