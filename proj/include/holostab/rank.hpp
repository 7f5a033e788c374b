#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

namespace holostab {

namespace detail {

using SparseIntVec = std::vector<std::pair<int, std::int64_t>>;  // sorted by row

inline std::int64_t gcd64(std::int64_t a, std::int64_t b) {
  return std::gcd(a < 0 ? -a : a, b < 0 ? -b : b);
}

// a*x - b*y on sorted sparse vectors, nullopt on overflow
inline std::optional<SparseIntVec> combine(std::int64_t a, const SparseIntVec& x, std::int64_t b,
                                           const SparseIntVec& y) {
  SparseIntVec out;
  out.reserve(x.size() + y.size());
  std::size_t i = 0, j = 0;
  while (i < x.size() || j < y.size()) {
    int r;
    std::int64_t xv = 0, yv = 0;
    if (j == y.size() || (i < x.size() && x[i].first < y[j].first)) {
      r = x[i].first; xv = x[i].second; ++i;
    } else if (i == x.size() || y[j].first < x[i].first) {
      r = y[j].first; yv = y[j].second; ++j;
    } else {
      r = x[i].first; xv = x[i].second; yv = y[j].second; ++i; ++j;
    }
    std::int64_t p, q, s;
    if (__builtin_mul_overflow(a, xv, &p) || __builtin_mul_overflow(b, yv, &q) ||
        __builtin_sub_overflow(p, q, &s))
      return std::nullopt;
    if (s != 0) out.emplace_back(r, s);
  }
  std::int64_t g = 0;
  for (auto& e : out) g = gcd64(g, e.second);
  if (g > 1)
    for (auto& e : out) e.second /= g;
  return out;
}

constexpr std::uint64_t kPrime = (std::uint64_t(1) << 61) - 1;

inline std::uint64_t mulmod(std::uint64_t a, std::uint64_t b) {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(a) * b) % kPrime);
}

inline std::uint64_t powmod(std::uint64_t a, std::uint64_t e) {
  std::uint64_t r = 1;
  while (e) {
    if (e & 1) r = mulmod(r, a);
    a = mulmod(a, a);
    e >>= 1;
  }
  return r;
}

inline std::uint64_t to_mod(std::int64_t v) {
  std::int64_t m = v % static_cast<std::int64_t>(kPrime);
  if (m < 0) m += static_cast<std::int64_t>(kPrime);
  return static_cast<std::uint64_t>(m);
}

// column reduction over GF(p), used only when integer entries overflow
inline int modular_rank(const std::vector<SparseIntVec>& cols) {
  using ModVec = std::vector<std::pair<int, std::uint64_t>>;
  std::vector<std::optional<ModVec>> pivot_of_low;
  int rows = 0;
  for (auto& c : cols)
    for (auto& e : c) rows = std::max(rows, e.first + 1);
  pivot_of_low.resize(rows);
  int rank = 0;
  for (auto& c : cols) {
    ModVec v;
    for (auto& e : c) {
      auto m = to_mod(e.second);
      if (m) v.emplace_back(e.first, m);
    }
    while (!v.empty()) {
      int low = v.back().first;
      if (!pivot_of_low[low]) {
        std::uint64_t inv = powmod(v.back().second, kPrime - 2);
        for (auto& e : v) e.second = mulmod(e.second, inv);
        pivot_of_low[low] = std::move(v);
        ++rank;
        break;
      }
      const ModVec& p = *pivot_of_low[low];
      std::uint64_t f = v.back().second;  // pivot is monic at its low
      ModVec out;
      std::size_t i = 0, j = 0;
      while (i < v.size() || j < p.size()) {
        if (j == p.size() || (i < v.size() && v[i].first < p[j].first)) {
          out.push_back(v[i++]);
        } else {
          std::uint64_t sub = mulmod(f, p[j].second);
          std::uint64_t base = 0;
          int r = p[j].first;
          if (i < v.size() && v[i].first == r) base = v[i++].second;
          std::uint64_t val = (base + kPrime - sub) % kPrime;
          if (val) out.emplace_back(r, val);
          ++j;
        }
      }
      v = std::move(out);
    }
  }
  return rank;
}

}  // namespace detail

// Exact rank of an integer matrix via fraction-free column reduction.
// Rows are normalized by their gcd after each combination to keep entries small.
template <typename Scalar>
int exact_rank(const Eigen::SparseMatrix<Scalar>& A) {
  std::vector<detail::SparseIntVec> cols(A.cols());
  for (int k = 0; k < A.outerSize(); ++k)
    for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(A, k); it; ++it)
      if (it.value() != 0)
        cols[it.col()].emplace_back(static_cast<int>(it.row()), static_cast<std::int64_t>(it.value()));
  for (auto& c : cols) std::sort(c.begin(), c.end());

  std::vector<std::optional<detail::SparseIntVec>> pivot_of_low(A.rows());
  int rank = 0;
  for (auto& c : cols) {
    detail::SparseIntVec v = c;
    while (!v.empty()) {
      int low = v.back().first;
      if (!pivot_of_low[low]) {
        pivot_of_low[low] = std::move(v);
        ++rank;
        break;
      }
      const auto& p = *pivot_of_low[low];
      std::int64_t a = p.back().second, b = v.back().second;
      std::int64_t g = detail::gcd64(a, b);
      auto next = detail::combine(a / g, v, b / g, p);
      if (!next) return detail::modular_rank(cols);
      v = std::move(*next);
    }
  }
  return rank;
}

// numerical rank: singular values above tol_rel * largest
inline int numerical_rank(const Eigen::MatrixXd& A, double tol_rel = 1e-10) {
  if (A.size() == 0) return 0;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(A);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int r = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > tol_rel * s(0)) ++r;
  return r;
}

}  // namespace holostab
