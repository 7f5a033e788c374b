#include "holostab/config.hpp"
#include "holostab/inspect.hpp"
#include "holostab/io.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <clocale>
#include <filesystem>

#include <unistd.h>

using namespace holostab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto d = fs::temp_directory_path() / ("holostab_io_" + std::to_string(::getpid()));
  fs::create_directories(d);
  return d / name;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;
}

}  // namespace

TEST(Io, RoundTripIsExact) {
  CounterRng rng(4);
  auto c = oracle::random_connected_complex(rng, 10, 0.5, 0.7);
  auto p = oracle::random_weights(rng, c);
  auto path = scratch("rt.json");
  save_complex(path, c, p);
  auto wc = load_complex(path);
  EXPECT_EQ(wc.complex.labels(), c.labels());
  EXPECT_EQ(wc.complex.edges(), c.edges());
  EXPECT_EQ(wc.complex.triangles(), c.triangles());
  EXPECT_EQ(wc.profile.w1, p.w1);
  EXPECT_EQ(wc.profile.w2_init, p.w2_init);
  EXPECT_EQ(wc.profile.rho, p.rho);
  EXPECT_FALSE(fs::exists(path.string() + ".tmp"));
}

TEST(Io, TrianglesDefaultToCliques) {
  auto wc = complex_from_json(Json::parse(R"({"edges": [[1,2],[2,3],[1,3],[3,4]]})"));
  EXPECT_EQ(wc.complex.num_vertices(), 4);
  EXPECT_EQ(wc.complex.num_triangles(), 1);
  EXPECT_EQ(wc.profile.w1, Eigen::VectorXd::Ones(4));
  auto none = complex_from_json(Json::parse(R"({"edges": [[1,2],[2,3],[1,3]], "triangles": []})"));
  EXPECT_EQ(none.complex.num_triangles(), 0);
}

TEST(Io, WeightsFollowListedOrder) {
  auto wc = complex_from_json(Json::parse(R"({"edges": [[2,3],[1,2]], "edge_weights": [0.3, 0.7]})"));
  auto e23 = wc.complex.edge_index(*wc.complex.vertex_index(2), *wc.complex.vertex_index(3));
  EXPECT_EQ(wc.profile.w1(*e23), 0.3);
}

TEST(Io, Errors) {
  auto bad = scratch("bad.json");
  write_atomic(bad, "{\"edges\": [[1,2],");
  EXPECT_EQ(code_of([&] { load_complex(bad); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { load_complex(scratch("missing.json")); }), ErrorCode::Io);
  EXPECT_EQ(code_of([] { complex_from_json(Json::parse("[1,2]")); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { complex_from_json(Json::parse(R"({"edges": [[1,2]], "edge_weights": [1, 2]})")); }),
            ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { complex_from_json(Json::parse(R"({"edges": [[1,2]], "edge_weights": [-1]})")); }),
            ErrorCode::NegativeWeight);
  EXPECT_EQ(code_of([] { complex_from_json(Json::parse(R"({"edges": [[1,1]]})")); }), ErrorCode::SelfLoop);
  EXPECT_EQ(code_of([] { complex_from_json(Json::parse(R"({"edges": [[1,2]], "triangles": [[1,2,3]]})")); }),
            ErrorCode::UnknownVertex);
}

TEST(Io, NumbersKeepAllDigits) {
  Json j;
  j["x"] = 0.1 + 0.2;
  j["y"] = 1.0 / 3.0;
  auto back = Json::parse(dump_json(j));
  EXPECT_EQ(back["x"].get<double>(), 0.1 + 0.2);
  EXPECT_EQ(back["y"].get<double>(), 1.0 / 3.0);
  EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(Io, LocaleDoesNotLeakIntoOutput) {
  const char* prev = std::setlocale(LC_ALL, nullptr);
  std::string saved = prev ? prev : "C";
  if (!std::setlocale(LC_ALL, "de_DE.UTF-8")) GTEST_SKIP() << "locale not installed";
  EXPECT_EQ(format_double(1.25), "1.25");
  EXPECT_EQ(CsvRow().add(1.25).str(), "1.25\n");
  std::setlocale(LC_ALL, saved.c_str());
}

TEST(Io, CsvQuoting) {
  EXPECT_EQ(CsvRow().add(std::string("a,b")).add(std::string("q\"x")).add(3).str(), "\"a,b\",\"q\"\"x\",3\n");
}

TEST(Config, JsonRoundTrip) {
  FlowConfig c;
  c.eps0 = 0.02;
  c.snap = false;
  c.solver.mode = SolverMode::Iterative;
  c.solver.precond = PrecondKind::Ichol;
  FlowConfig d;
  apply_json(Json::parse(dump_json(to_json(c))), d);
  EXPECT_EQ(dump_json(to_json(c)), dump_json(to_json(d)));
}

TEST(Config, RejectsUnknownAndBadValues) {
  FlowConfig c;
  EXPECT_EQ(code_of([&] { apply_json(Json::parse(R"({"epsilon": 1})"), c); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { apply_json(Json::parse(R"({"solver": {"foo": 1}})"), c); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { apply_json(Json::parse(R"({"h0": "big"})"), c); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { apply_json(Json::parse(R"({"solver": {"mode": "magic"}})"), c); }),
            ErrorCode::InvalidArgument);
}

TEST(Io, TrajectoryCsvShape) {
  TrajectoryRow r;
  r.step = 3;
  r.eps = 0.25;
  auto csv = trajectory_csv({r, r});
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "step,phase,eps,F,lambda_plus,mu2,normE,h,accepted,segment");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST(Inspect, Illustrative) {
  auto c = oracle::illustrative();
  auto p = oracle::illustrative_weights(c);
  auto s = summarize(c, p);
  EXPECT_EQ(s.b0, 1);
  EXPECT_EQ(s.b1, 1);
  EXPECT_GT(s.mu2, 0);
  EXPECT_GT(s.lambda_plus, 0);
  EXPECT_LT(s.inheritance_residual, 1e-8);
  auto d = oracle::dense_spectra(c, p, 0.0, Eigen::VectorXd::Zero(c.num_edges()));
  EXPECT_NEAR(s.mu2, d.mu2, 1e-10);
  EXPECT_NEAR(s.lambda_plus, d.lambda_plus, 1e-10);
}

TEST(Inspect, EmptyAndTriangleFree) {
  auto e = load_complex(std::string(HOLOSTAB_SAMPLES_DIR) + "/empty.json");
  auto s = summarize(e.complex, e.profile);
  EXPECT_EQ(s.n, 0);
  EXPECT_EQ(s.mu2, 0.0);
  auto h = load_complex(std::string(HOLOSTAB_SAMPLES_DIR) + "/hollow_square.json");
  auto t = summarize(h.complex, h.profile);
  EXPECT_EQ(t.b1, 1);
  EXPECT_EQ(t.lambda_plus, 0.0);
  EXPECT_NEAR(t.mu2, 2.0 / 3.0, 1e-10);
}
