#pragma once

#include "holostab/error.hpp"
#include "holostab/rank.hpp"

#include <Eigen/SparseCore>

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace holostab {

using Label = std::int64_t;
using Edge = std::array<int, 2>;
using Triangle = std::array<int, 3>;

// Order-2 simplicial complex with 0-based, lexicographically sorted simplices.
// External vertex ids live in labels().
class SimplicialComplex {
 public:
  SimplicialComplex() = default;

  int num_vertices() const { return static_cast<int>(labels_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  int num_triangles() const { return static_cast<int>(triangles_.size()); }

  const std::vector<Label>& labels() const { return labels_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }

  std::optional<int> edge_index(int i, int j) const {
    if (i > j) std::swap(i, j);
    auto it = edge_index_.find(key(i, j));
    if (it == edge_index_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<int> triangle_index(int i, int j, int k) const {
    std::array<int, 3> t{i, j, k};
    std::sort(t.begin(), t.end());
    auto it = tri_index_.find(key3(t[0], t[1], t[2]));
    if (it == tri_index_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<int> vertex_index(Label id) const {
    auto it = vertex_index_.find(id);
    if (it == vertex_index_.end()) return std::nullopt;
    return it->second;
  }

  // face edges of triangle t in boundary order: (j,k), (i,k), (i,j) with signs +,-,+
  const std::array<int, 3>& triangle_faces(int t) const { return tri_faces_[t]; }
  static constexpr std::array<int, 3> face_signs() { return {1, -1, 1}; }

  // triangles having edge e as a face
  const std::vector<int>& edge_cofaces(int e) const { return edge_cofaces_[e]; }

  std::array<Label, 2> edge_labels(int e) const {
    return {labels_[edges_[e][0]], labels_[edges_[e][1]]};
  }

  friend SimplicialComplex build_complex_indexed(std::vector<Label>, std::vector<Edge>,
                                                 std::optional<std::vector<Triangle>>);

 private:
  std::int64_t key(int i, int j) const { return std::int64_t(i) * num_vertices() + j; }
  std::int64_t key3(int i, int j, int k) const {
    std::int64_t n = num_vertices();
    return (std::int64_t(i) * n + j) * n + k;
  }

  std::vector<Label> labels_;
  std::vector<Edge> edges_;
  std::vector<Triangle> triangles_;
  std::unordered_map<Label, int> vertex_index_;
  std::unordered_map<std::int64_t, int> edge_index_;
  std::unordered_map<std::int64_t, int> tri_index_;
  std::vector<std::array<int, 3>> tri_faces_;
  std::vector<std::vector<int>> edge_cofaces_;
};

// Builds from 0-based vertex positions into `labels`. Triangles omitted -> all 3-cliques.
inline SimplicialComplex build_complex_indexed(std::vector<Label> labels, std::vector<Edge> edges,
                                               std::optional<std::vector<Triangle>> triangles) {
  SimplicialComplex c;
  const int n = static_cast<int>(labels.size());

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return labels[a] < labels[b]; });
  std::vector<int> pos(n);
  for (int i = 0; i < n; ++i) pos[order[i]] = i;
  c.labels_.resize(n);
  for (int i = 0; i < n; ++i) {
    c.labels_[i] = labels[order[i]];
    if (i > 0 && c.labels_[i] == c.labels_[i - 1])
      throw Error(ErrorCode::DuplicateSimplex, "vertex " + std::to_string(c.labels_[i]));
    c.vertex_index_[c.labels_[i]] = i;
  }

  for (auto& e : edges) {
    if (e[0] < 0 || e[0] >= n || e[1] < 0 || e[1] >= n)
      throw Error(ErrorCode::UnknownVertex, "edge references a missing vertex");
    if (e[0] == e[1])
      throw Error(ErrorCode::SelfLoop, "vertex " + std::to_string(labels[e[0]]));
    e = {pos[e[0]], pos[e[1]]};
    if (e[0] > e[1]) std::swap(e[0], e[1]);
  }
  std::sort(edges.begin(), edges.end());
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (edges[i] == edges[i - 1])
      throw Error(ErrorCode::DuplicateSimplex, "edge (" + std::to_string(c.labels_[edges[i][0]]) + "," +
                                                   std::to_string(c.labels_[edges[i][1]]) + ")");
  c.edges_ = std::move(edges);
  for (int e = 0; e < c.num_edges(); ++e) c.edge_index_[c.key(c.edges_[e][0], c.edges_[e][1])] = e;

  std::vector<Triangle> tris;
  if (triangles) {
    tris = std::move(*triangles);
    for (auto& t : tris) {
      for (int v : t)
        if (v < 0 || v >= n) throw Error(ErrorCode::UnknownVertex, "triangle references a missing vertex");
      t = {pos[t[0]], pos[t[1]], pos[t[2]]};
      std::sort(t.begin(), t.end());
      if (t[0] == t[1] || t[1] == t[2]) throw Error(ErrorCode::SelfLoop, "degenerate triangle");
    }
    std::sort(tris.begin(), tris.end());
    for (std::size_t i = 1; i < tris.size(); ++i)
      if (tris[i] == tris[i - 1]) throw Error(ErrorCode::DuplicateSimplex, "repeated triangle");
  } else {
    // sorted adjacency intersection
    std::vector<std::vector<int>> up(n);
    for (auto& e : c.edges_) up[e[0]].push_back(e[1]);
    for (int i = 0; i < n; ++i)
      for (int j : up[i]) {
        std::vector<int> common;
        std::set_intersection(up[i].begin(), up[i].end(), up[j].begin(), up[j].end(),
                              std::back_inserter(common));
        for (int k : common) tris.push_back({i, j, k});
      }
    std::sort(tris.begin(), tris.end());
  }

  c.triangles_ = std::move(tris);
  c.tri_faces_.resize(c.triangles_.size());
  c.edge_cofaces_.assign(c.edges_.size(), {});
  for (int t = 0; t < c.num_triangles(); ++t) {
    auto [i, j, k] = c.triangles_[t];
    std::array<std::array<int, 2>, 3> faces{{{j, k}, {i, k}, {i, j}}};
    for (int f = 0; f < 3; ++f) {
      auto idx = c.edge_index(faces[f][0], faces[f][1]);
      if (!idx)
        throw Error(ErrorCode::MissingFace, "edge (" + std::to_string(c.labels_[faces[f][0]]) + "," +
                                                std::to_string(c.labels_[faces[f][1]]) + ") of a triangle");
      c.tri_faces_[t][f] = *idx;
      c.edge_cofaces_[*idx].push_back(t);
    }
    c.tri_index_[c.key3(i, j, k)] = t;
  }
  return c;
}

// Builds from external vertex ids.
inline SimplicialComplex build_complex(const std::vector<Label>& vertices,
                                       const std::vector<std::array<Label, 2>>& edges,
                                       const std::optional<std::vector<std::array<Label, 3>>>& triangles = std::nullopt) {
  std::unordered_map<Label, int> idx;
  for (int i = 0; i < static_cast<int>(vertices.size()); ++i) idx.emplace(vertices[i], i);
  auto at = [&](Label v) {
    auto it = idx.find(v);
    if (it == idx.end()) throw Error(ErrorCode::UnknownVertex, "vertex " + std::to_string(v));
    return it->second;
  };
  std::vector<Edge> ie;
  ie.reserve(edges.size());
  for (auto& e : edges) ie.push_back({at(e[0]), at(e[1])});
  std::optional<std::vector<Triangle>> it;
  if (triangles) {
    it.emplace();
    for (auto& t : *triangles) it->push_back({at(t[0]), at(t[1]), at(t[2])});
  }
  return build_complex_indexed(vertices, std::move(ie), std::move(it));
}

struct BoundaryMatrix {
  int order = 1;
  Eigen::SparseMatrix<int> entries;

  int rows() const { return static_cast<int>(entries.rows()); }
  int cols() const { return static_cast<int>(entries.cols()); }
  Eigen::SparseMatrix<double> as_double() const { return entries.cast<double>(); }
};

inline BoundaryMatrix boundary_matrix(const SimplicialComplex& c, int k) {
  BoundaryMatrix b;
  b.order = k;
  std::vector<Eigen::Triplet<int>> trip;
  if (k == 1) {
    b.entries.resize(c.num_vertices(), c.num_edges());
    for (int e = 0; e < c.num_edges(); ++e) {
      trip.emplace_back(c.edges()[e][0], e, -1);
      trip.emplace_back(c.edges()[e][1], e, 1);
    }
  } else if (k == 2) {
    b.entries.resize(c.num_edges(), c.num_triangles());
    auto s = SimplicialComplex::face_signs();
    for (int t = 0; t < c.num_triangles(); ++t)
      for (int f = 0; f < 3; ++f) trip.emplace_back(c.triangle_faces(t)[f], t, s[f]);
  } else {
    throw Error(ErrorCode::InvalidArgument, "boundary order must be 1 or 2");
  }
  b.entries.setFromTriplets(trip.begin(), trip.end());
  return b;
}

// connected components by union-find; returns component id per vertex
inline std::vector<int> components(int n, const std::vector<Edge>& edges,
                                   const std::vector<bool>* keep = nullptr) {
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (keep && !(*keep)[e]) continue;
    int a = find(edges[e][0]), b = find(edges[e][1]);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<int> comp(n, -1), id(n, -1);
  int next = 0;
  for (int i = 0; i < n; ++i) {
    int r = find(i);
    if (id[r] < 0) id[r] = next++;
    comp[i] = id[r];
  }
  return comp;
}

inline int count_components(int n, const std::vector<Edge>& edges, const std::vector<bool>* keep = nullptr) {
  auto comp = components(n, edges, keep);
  return comp.empty() ? 0 : *std::max_element(comp.begin(), comp.end()) + 1;
}

struct Betti {
  int b0 = 0;
  int b1 = 0;
  int rank_b1 = 0;
  int rank_b2 = 0;
};

inline constexpr int kExactRankLimit = 2000;

// rank of B2 restricted to a subset of triangles (all when mask is null)
inline int boundary2_rank(const SimplicialComplex& c, const std::vector<bool>* tri_keep = nullptr) {
  std::vector<Eigen::Triplet<int>> trip;
  int cols = 0;
  auto s = SimplicialComplex::face_signs();
  for (int t = 0; t < c.num_triangles(); ++t) {
    if (tri_keep && !(*tri_keep)[t]) continue;
    for (int f = 0; f < 3; ++f) trip.emplace_back(c.triangle_faces(t)[f], cols, s[f]);
    ++cols;
  }
  if (cols == 0) return 0;
  if (c.num_edges() + cols <= kExactRankLimit) {
    Eigen::SparseMatrix<int> B(c.num_edges(), cols);
    B.setFromTriplets(trip.begin(), trip.end());
    return exact_rank(B);
  }
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(c.num_edges(), cols);
  for (auto& t : trip) B(t.row(), t.col()) = t.value();
  return numerical_rank(B, 1e-10);
}

inline Betti betti_numbers(const SimplicialComplex& c) {
  Betti b;
  b.b0 = count_components(c.num_vertices(), c.edges());
  b.rank_b1 = c.num_vertices() - b.b0;
  b.rank_b2 = boundary2_rank(c);
  b.b1 = c.num_edges() - b.rank_b1 - b.rank_b2;
  return b;
}

// Betti numbers after dropping edges with keep[e] == false and every triangle on them.
inline Betti betti_reduced(const SimplicialComplex& c, const std::vector<bool>& edge_keep) {
  std::vector<bool> tri_keep(c.num_triangles(), true);
  for (int t = 0; t < c.num_triangles(); ++t)
    for (int e : c.triangle_faces(t))
      if (!edge_keep[e]) tri_keep[t] = false;
  int live = static_cast<int>(std::count(edge_keep.begin(), edge_keep.end(), true));
  Betti b;
  b.b0 = count_components(c.num_vertices(), c.edges(), &edge_keep);
  b.rank_b1 = c.num_vertices() - b.b0;
  b.rank_b2 = boundary2_rank(c, &tri_keep);
  b.b1 = live - b.rank_b1 - b.rank_b2;
  return b;
}

}  // namespace holostab
