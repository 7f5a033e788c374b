#pragma once

#include "holostab/complex.hpp"
#include "holostab/error.hpp"
#include "holostab/flow.hpp"
#include "holostab/io.hpp"
#include "holostab/parallel.hpp"
#include "holostab/weights.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace holostab {

struct Link {
  int from = 0;  // node ids as in the file
  int to = 0;
  double time = 0;
};

struct RoadNetwork {
  int num_zones = 0;
  int num_nodes = 0;
  int first_thru_node = 0;
  std::vector<Link> links;
  std::map<std::pair<int, int>, double> demand;  // (i < j) -> d(i,j) + d(j,i)
  std::map<std::string, std::string> metadata;

  double pair_demand(int i, int j) const {
    if (i > j) std::swap(i, j);
    auto it = demand.find({i, j});
    return it == demand.end() ? 0.0 : it->second;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::string normalize_column(std::string s) {
  s = trim(s);
  std::string out;
  for (char ch : s) {
    if (std::isspace(static_cast<unsigned char>(ch)) || ch == '-') {
      if (!out.empty() && out.back() != '_') out += '_';
    } else {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

// "<KEY> value" lines up to <END OF METADATA>; returns the line index after it
inline std::size_t parse_metadata(const std::vector<std::string>& lines, std::map<std::string, std::string>& meta,
                                  const std::string& what) {
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string l = trim(lines[i]);
    if (l.empty()) continue;
    if (l[0] != '<') {
      if (l[0] == '~') throw Error(ErrorCode::MalformedHeader, what + ": missing <END OF METADATA>");
      continue;
    }
    auto close = l.find('>');
    if (close == std::string::npos) throw Error(ErrorCode::MalformedHeader, what + ": unterminated tag: " + l);
    std::string key = l.substr(1, close - 1), val = trim(l.substr(close + 1));
    for (auto& ch : key) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    if (key == "END OF METADATA") return i + 1;
    meta[key] = val;
  }
  throw Error(ErrorCode::MalformedHeader, what + ": missing <END OF METADATA>");
}

inline int meta_int(const std::map<std::string, std::string>& meta, const std::string& key, const std::string& what) {
  auto it = meta.find(key);
  if (it == meta.end()) throw Error(ErrorCode::MalformedHeader, what + ": missing <" + key + ">");
  try {
    std::size_t pos = 0;
    int v = std::stoi(it->second, &pos);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::MalformedHeader, what + ": bad value for <" + key + ">");
  }
}

inline std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

inline double parse_number(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::MalformedHeader, what + ": not a number: '" + s + "'");
  }
}

}  // namespace detail

inline RoadNetwork parse_tntp_text(const std::string& net_text, const std::string& trips_text) {
  RoadNetwork rn;
  auto lines = detail::split_lines(net_text);
  std::size_t i = detail::parse_metadata(lines, rn.metadata, "network file");
  rn.num_zones = detail::meta_int(rn.metadata, "NUMBER OF ZONES", "network file");
  rn.num_nodes = detail::meta_int(rn.metadata, "NUMBER OF NODES", "network file");
  rn.first_thru_node = rn.metadata.count("FIRST THRU NODE")
                           ? detail::meta_int(rn.metadata, "FIRST THRU NODE", "network file")
                           : 1;
  if (rn.num_zones < 1 || rn.num_nodes < rn.num_zones)
    throw Error(ErrorCode::MalformedHeader, "network file: zone/node counts inconsistent");

  std::vector<std::string> cols;
  for (; i < lines.size(); ++i) {
    std::string l = detail::trim(lines[i]);
    if (l.empty()) continue;
    if (l[0] != '~') throw Error(ErrorCode::MalformedHeader, "network file: expected '~' column header");
    // columns are separated by tabs or runs of two or more spaces; headers
    // with neither use single spaces between underscored names
    std::string body = detail::trim(l.substr(1));
    const bool spaced = body.find('\t') == std::string::npos && body.find("  ") == std::string::npos;
    std::string cur;
    for (std::size_t k = 0; k <= body.size(); ++k) {
      bool sep = k == body.size() || body[k] == '\t' || body[k] == ';' ||
                 (body[k] == ' ' && (spaced || (k + 1 < body.size() && body[k + 1] == ' ')));
      if (!sep) {
        cur += body[k];
        continue;
      }
      auto name = detail::normalize_column(cur);
      if (!name.empty()) cols.push_back(name);
      cur.clear();
    }
    ++i;
    break;
  }
  if (cols.empty()) throw Error(ErrorCode::MalformedHeader, "network file: no column header");
  auto col = [&](const std::string& name) {
    auto it = std::find(cols.begin(), cols.end(), name);
    if (it == cols.end()) throw Error(ErrorCode::MissingColumn, "network file: no '" + name + "' column");
    return static_cast<std::size_t>(it - cols.begin());
  };
  const std::size_t ci = col("init_node"), cj = col("term_node"), ct = col("free_flow_time");

  for (; i < lines.size(); ++i) {
    std::string l = detail::trim(lines[i]);
    if (l.empty() || l[0] == '~') continue;
    std::replace(l.begin(), l.end(), ';', ' ');
    std::istringstream ls(l);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (tok.size() <= std::max({ci, cj, ct}))
      throw Error(ErrorCode::MissingColumn, "network file line " + std::to_string(i + 1) + ": too few fields");
    Link lk;
    lk.from = static_cast<int>(detail::parse_number(tok[ci], "network file"));
    lk.to = static_cast<int>(detail::parse_number(tok[cj], "network file"));
    lk.time = detail::parse_number(tok[ct], "network file");
    if (lk.from < 1 || lk.from > rn.num_nodes || lk.to < 1 || lk.to > rn.num_nodes)
      throw Error(ErrorCode::InvalidArgument, "network file line " + std::to_string(i + 1) + ": node out of range");
    if (!(lk.time >= 0) || !std::isfinite(lk.time))
      throw Error(ErrorCode::InvalidArgument, "network file line " + std::to_string(i + 1) + ": negative time");
    rn.links.push_back(lk);
  }

  std::map<std::string, std::string> tmeta;
  auto tl = detail::split_lines(trips_text);
  std::size_t k = detail::parse_metadata(tl, tmeta, "trips file");
  if (tmeta.count("NUMBER OF ZONES") && detail::meta_int(tmeta, "NUMBER OF ZONES", "trips file") != rn.num_zones)
    throw Error(ErrorCode::MalformedHeader, "trips file: zone count differs from network file");
  int origin = 0;
  auto add = [&](int o, int d, double v) {
    if (d < 1 || d > rn.num_zones) throw Error(ErrorCode::UnknownZone, "trips file: zone " + std::to_string(d));
    if (!(v >= 0) || !std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "trips file: negative demand");
    if (o == d || v == 0) return;
    rn.demand[{std::min(o, d), std::max(o, d)}] += v;
  };
  for (; k < tl.size(); ++k) {
    std::string l = detail::trim(tl[k]);
    if (l.empty() || l[0] == '~') continue;
    if (l.rfind("Origin", 0) == 0) {
      origin = static_cast<int>(detail::parse_number(detail::trim(l.substr(6)), "trips file"));
      if (origin < 1 || origin > rn.num_zones)
        throw Error(ErrorCode::UnknownZone, "trips file: origin " + std::to_string(origin));
      continue;
    }
    if (origin == 0) throw Error(ErrorCode::MalformedHeader, "trips file: demand before any Origin line");
    std::string s;
    for (char ch : l) {
      if (ch == ':') s += " : ";
      else if (ch == ';') s += ' ';
      else s += ch;
    }
    std::istringstream ls(s);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.size() % 3 != 0) throw Error(ErrorCode::MalformedHeader, "trips file line " + std::to_string(k + 1));
    for (std::size_t q = 0; q < tok.size(); q += 3) {
      if (tok[q + 1] != ":") throw Error(ErrorCode::MalformedHeader, "trips file line " + std::to_string(k + 1));
      add(origin, static_cast<int>(detail::parse_number(tok[q], "trips file")),
          detail::parse_number(tok[q + 2], "trips file"));
    }
  }
  return rn;
}

inline RoadNetwork parse_tntp(const std::filesystem::path& net_file, const std::filesystem::path& trips_file) {
  return parse_tntp_text(read_file(net_file), read_file(trips_file));
}

// directed shortest-path times from node `src` (1-based ids), index 0 unused
inline std::vector<double> dijkstra(const std::vector<std::vector<std::pair<int, double>>>& adj, int src) {
  std::vector<double> dist(adj.size(), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[src] = 0;
  pq.push({0.0, src});
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    for (auto [v, w] : adj[u]) {
      double nd = d + w;
      if (nd < dist[v]) {
        dist[v] = nd;
        pq.push({nd, v});
      }
    }
  }
  return dist;
}

// symmetric zone-to-zone times, the mean of the two directed shortest paths
inline Eigen::MatrixXd zone_times(const RoadNetwork& rn) {
  std::vector<std::vector<std::pair<int, double>>> adj(rn.num_nodes + 1);
  for (auto& l : rn.links) adj[l.from].push_back({l.to, l.time});
  const int z = rn.num_zones;
  Eigen::MatrixXd D(z, z);
  parallel_for(static_cast<std::size_t>(z), [&](std::size_t i) {
    auto d = dijkstra(adj, static_cast<int>(i) + 1);
    for (int j = 0; j < z; ++j) D(static_cast<Eigen::Index>(i), j) = d[j + 1];
  });
  Eigen::MatrixXd T = 0.5 * (D + D.transpose());
  for (int i = 0; i < z; ++i)
    for (int j = i + 1; j < z; ++j)
      if (!std::isfinite(T(i, j)))
        throw Error(ErrorCode::DisconnectedZones,
                    "no path between zones " + std::to_string(i + 1) + " and " + std::to_string(j + 1));
  return T;
}

// linear interpolation between order statistics
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  double pos = q * static_cast<double>(v.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(pos));
  auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct ZoneComplex {
  SimplicialComplex complex;
  WeightProfile profile;
  Eigen::VectorXd edge_time;    // per edge of complex
  Eigen::VectorXd edge_demand;  // symmetric raw demand per edge
  double filter_quantile = 0.9;
  double time_threshold = 0;
  int pairs_total = 0;
  int removed_by_quantile = 0;
  int removed_degenerate = 0;
  int removed_zero_demand = 0;
  std::vector<int> dropped_zones;  // zones left without edges
  double min_demand = 0;
};

inline constexpr double kDegenerateRel = 1e-9;

inline ZoneComplex lift_to_zones(const RoadNetwork& rn, double filter_quantile = 0.9) {
  if (!(filter_quantile > 0 && filter_quantile <= 1))
    throw Error(ErrorCode::InvalidArgument, "filter quantile must lie in (0, 1]");
  const int z = rn.num_zones;
  Eigen::MatrixXd T = zone_times(rn);
  ZoneComplex zc;
  zc.filter_quantile = filter_quantile;
  std::vector<double> all;
  for (int i = 0; i < z; ++i)
    for (int j = i + 1; j < z; ++j) all.push_back(T(i, j));
  zc.pairs_total = static_cast<int>(all.size());
  zc.time_threshold = quantile(all, filter_quantile);

  std::vector<std::vector<char>> keep(z, std::vector<char>(z, 0));
  for (int i = 0; i < z; ++i)
    for (int j = i + 1; j < z; ++j) {
      if (T(i, j) <= zc.time_threshold) keep[i][j] = keep[j][i] = 1;
      else ++zc.removed_by_quantile;
    }

  // longest side of a degenerate triangle goes, judged on the filtered graph
  std::vector<std::vector<char>> drop(z, std::vector<char>(z, 0));
  for (int i = 0; i < z; ++i)
    for (int j = i + 1; j < z; ++j) {
      if (!keep[i][j]) continue;
      for (int k = j + 1; k < z; ++k) {
        if (!keep[i][k] || !keep[j][k]) continue;
        std::array<std::pair<double, std::pair<int, int>>, 3> s{
            {{T(i, j), {i, j}}, {T(i, k), {i, k}}, {T(j, k), {j, k}}}};
        for (int a = 0; a < 3; ++a) {
          double other = s[(a + 1) % 3].first + s[(a + 2) % 3].first;
          double t = s[a].first;
          if (t >= s[(a + 1) % 3].first && t >= s[(a + 2) % 3].first &&
              std::abs(t - other) <= kDegenerateRel * t && t > 0) {
            auto [u, v] = s[a].second;
            drop[u][v] = drop[v][u] = 1;
          }
        }
      }
    }

  std::vector<std::array<int, 3>> kept;  // i, j, zone pair
  std::vector<double> times, dem;
  for (int i = 0; i < z; ++i)
    for (int j = i + 1; j < z; ++j) {
      if (!keep[i][j]) continue;
      if (drop[i][j]) {
        ++zc.removed_degenerate;
        continue;
      }
      double d = rn.pair_demand(i + 1, j + 1);
      if (!(d > 0)) {
        ++zc.removed_zero_demand;
        continue;
      }
      kept.push_back({i, j, 0});
      times.push_back(T(i, j));
      dem.push_back(d);
    }

  std::vector<char> used(z, 0);
  for (auto& e : kept) used[e[0]] = used[e[1]] = 1;
  std::vector<Label> verts;
  for (int i = 0; i < z; ++i) {
    if (used[i]) verts.push_back(i + 1);
    else zc.dropped_zones.push_back(i + 1);
  }
  std::vector<std::array<Label, 2>> edges;
  for (auto& e : kept) edges.push_back({e[0] + 1, e[1] + 1});
  zc.complex = build_complex(verts, edges, std::nullopt);
  const auto& c = zc.complex;
  zc.profile = WeightProfile::uniform(c);
  zc.edge_time.resize(c.num_edges());
  zc.edge_demand.resize(c.num_edges());
  zc.min_demand = dem.empty() ? 0.0 : *std::min_element(dem.begin(), dem.end());
  for (std::size_t k = 0; k < kept.size(); ++k) {
    auto a = c.vertex_index(kept[k][0] + 1), b = c.vertex_index(kept[k][1] + 1);
    int e = *c.edge_index(*a, *b);
    zc.edge_time(e) = times[k];
    zc.edge_demand(e) = dem[k];
    zc.profile.w1(e) = std::log10(dem[k] / (0.95 * zc.min_demand));
  }
  return zc;
}

inline Json zone_provenance(const ZoneComplex& zc, const std::string& net, const std::string& trips) {
  Json j;
  j["net_file"] = net;
  j["trips_file"] = trips;
  j["filter_quantile"] = zc.filter_quantile;
  j["time_threshold"] = zc.time_threshold;
  j["zone_pairs"] = zc.pairs_total;
  j["removed_by_quantile"] = zc.removed_by_quantile;
  j["removed_degenerate"] = zc.removed_degenerate;
  j["removed_zero_demand"] = zc.removed_zero_demand;
  j["dropped_zones"] = zc.dropped_zones;
  j["min_demand"] = zc.min_demand;
  j["weight_transform"] = "log10(d / (0.95 * min d))";
  Json edges = Json::array();
  for (int e = 0; e < zc.complex.num_edges(); ++e) {
    auto l = zc.complex.edge_labels(e);
    Json r;
    r["zones"] = {l[0], l[1]};
    r["time"] = zc.edge_time(e);
    r["demand"] = zc.edge_demand(e);
    r["weight"] = zc.profile.w1(e);
    edges.push_back(r);
  }
  j["edges"] = edges;
  return j;
}

struct SweepRow {
  double quantile = 0;
  int n = 0, m = 0, triangles = 0, b1 = 0;
};

inline std::vector<SweepRow> quantile_sweep(const RoadNetwork& rn, const std::vector<double>& qs) {
  std::vector<SweepRow> out;
  for (double q : qs) {
    auto zc = lift_to_zones(rn, q);
    SweepRow r;
    r.quantile = q;
    r.n = zc.complex.num_vertices();
    r.m = zc.complex.num_edges();
    r.triangles = zc.complex.num_triangles();
    r.b1 = betti_numbers(zc.complex).b1;
    out.push_back(r);
  }
  return out;
}

// row closest to (n, m, triangles) in summed relative error
inline SweepRow best_match(const std::vector<SweepRow>& rows, int n, int m, int triangles) {
  if (rows.empty()) throw Error(ErrorCode::InvalidArgument, "empty sweep");
  auto err = [&](const SweepRow& r) {
    auto rel = [](double a, double b) { return b > 0 ? std::abs(a - b) / b : std::abs(a - b); };
    return rel(r.n, n) + rel(r.m, m) + rel(r.triangles, triangles);
  };
  return *std::min_element(rows.begin(), rows.end(),
                           [&](const SweepRow& a, const SweepRow& b) { return err(a) < err(b); });
}

// orthonormal basis of the harmonic 1-chains (unit weights) on the edges with keep = 1
inline Eigen::MatrixXd harmonic_basis(const SimplicialComplex& c, const std::vector<bool>& keep) {
  const int m = c.num_edges();
  std::vector<int> idx(m, -1);
  int live = 0;
  for (int e = 0; e < m; ++e)
    if (keep[e]) idx[e] = live++;
  Eigen::MatrixXd B1 = Eigen::MatrixXd::Zero(c.num_vertices(), live);
  for (int e = 0; e < m; ++e)
    if (idx[e] >= 0) {
      B1(c.edges()[e][0], idx[e]) = -1;
      B1(c.edges()[e][1], idx[e]) = 1;
    }
  std::vector<int> tris;
  for (int t = 0; t < c.num_triangles(); ++t) {
    bool ok = true;
    for (int e : c.triangle_faces(t)) ok &= keep[e];
    if (ok) tris.push_back(t);
  }
  Eigen::MatrixXd B2 = Eigen::MatrixXd::Zero(live, static_cast<Eigen::Index>(tris.size()));
  auto sg = SimplicialComplex::face_signs();
  for (std::size_t k = 0; k < tris.size(); ++k)
    for (int f = 0; f < 3; ++f) B2(idx[c.triangle_faces(tris[k])[f]], static_cast<Eigen::Index>(k)) = sg[f];
  Eigen::MatrixXd L = B1.transpose() * B1 + B2 * B2.transpose();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m, 0);
  if (live == 0) return H;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L);
  const double tol = 1e-9 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  int k = 0;
  while (k < live && es.eigenvalues()(k) < tol) ++k;
  H = Eigen::MatrixXd::Zero(m, k);
  for (int e = 0; e < m; ++e)
    if (idx[e] >= 0) H.row(e) = es.eigenvectors().row(idx[e]).head(k);
  return H;
}

struct HoleEntry {
  std::array<Label, 2> edge;
  double value = 0;
};

struct TransportReport {
  StabilityResult result;
  double percentile = 0;  // eps* / sum of edge weights
  std::vector<std::array<Label, 2>> eliminated;
  int b1_before = 0, b1_after = 0;
  std::vector<HoleEntry> new_hole;  // dominant entries of the created harmonic flow
  std::vector<std::string> notes;
};

// Harmonic flow on the reduced complex orthogonal to the old harmonic space.
inline std::vector<HoleEntry> new_hole_support(const SimplicialComplex& c, const std::vector<int>& eliminated,
                                               double rel = 0.1) {
  const int m = c.num_edges();
  std::vector<bool> all(m, true), red(m, true);
  for (int e : eliminated) red[e] = false;
  Eigen::MatrixXd Hold = harmonic_basis(c, all), Hred = harmonic_basis(c, red);
  if (Hred.cols() == 0) return {};
  for (int e : eliminated) Hold.row(e).setZero();
  Eigen::MatrixXd P = Hred;
  if (Hold.cols() > 0) {
    Eigen::BDCSVD<Eigen::MatrixXd> s(Hold, Eigen::ComputeThinU);
    int r = 0;
    while (r < s.singularValues().size() && s.singularValues()(r) > 1e-10) ++r;
    Eigen::MatrixXd U = s.matrixU().leftCols(r);
    P -= U * (U.transpose() * P);
  }
  Eigen::BDCSVD<Eigen::MatrixXd> s(P, Eigen::ComputeThinU);
  if (s.singularValues()(0) < 1e-8) return {};
  Eigen::VectorXd v = s.matrixU().col(0);
  Eigen::Index imax;
  double vmax = v.cwiseAbs().maxCoeff(&imax);
  if (v(imax) < 0) v = -v;
  std::vector<HoleEntry> out;
  for (int e = 0; e < m; ++e)
    if (std::abs(v(e)) >= rel * vmax) out.push_back({c.edge_labels(e), v(e)});
  std::sort(out.begin(), out.end(),
            [](const HoleEntry& a, const HoleEntry& b) { return std::abs(a.value) > std::abs(b.value); });
  return out;
}

inline TransportReport stability_report(const ZoneComplex& zc, const FlowConfig& cfg) {
  const auto& c = zc.complex;
  TransportReport rep;
  if (c.num_edges() == 0) throw Error(ErrorCode::InvalidArgument, "zone complex has no edges");
  if (count_components(c.num_vertices(), c.edges()) != 1)
    rep.notes.push_back("zone complex is not connected");
  rep.result = run_stability(c, zc.profile, cfg);
  const auto& r = rep.result;
  rep.percentile = r.eps_star / zc.profile.w1.sum();
  for (int e : r.eliminated) rep.eliminated.push_back(c.edge_labels(e));
  rep.b1_before = r.betti_before.b1;
  rep.b1_after = r.betti_after.b1;
  if (rep.b1_before == 0) rep.notes.push_back("no holes before the perturbation; the hole is created from zero");
  if (r.converged) rep.new_hole = new_hole_support(c, r.eliminated);
  return rep;
}

}  // namespace holostab
