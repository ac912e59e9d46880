// Copyright 2026 The relfuzz Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Maximum-weight bipartite matching (Kuhn-Munkres / Hungarian algorithm).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

namespace relfuzz {

// Row-major weight matrix.
class WeightMatrix {
 public:
  WeightMatrix() = default;
  WeightMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  WeightMatrix(std::initializer_list<std::initializer_list<double>> init) {
    rows_ = init.size();
    cols_ = rows_ ? init.begin()->size() : 0;
    for (const auto& row : init) data_.insert(data_.end(), row.begin(), row.end());
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct Assignment {
  // (row, col) pairs sorted by row. Rows or columns beyond the shorter side
  // stay unmatched.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  double total = 0.0;
};

namespace detail {

// O(n^3) shortest augmenting path with potentials on a square cost matrix
// (minimization). Returns col_of_row.
inline std::vector<std::size_t> hungarian_min(const std::vector<double>& cost, std::size_t n) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  // 1-based arrays, index 0 is the virtual root.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> col_of_row(n, 0);
  for (std::size_t j = 1; j <= n; ++j) {
    if (p[j] != 0) col_of_row[p[j] - 1] = j - 1;
  }
  return col_of_row;
}

// Best total weight on the square matrix `w` restricted to the rows and
// columns flagged free.
inline double best_total(const std::vector<double>& w, std::size_t n,
                         const std::vector<bool>& row_free, const std::vector<bool>& col_free) {
  std::vector<std::size_t> rows, cols;
  for (std::size_t i = 0; i < n; ++i) {
    if (row_free[i]) rows.push_back(i);
    if (col_free[i]) cols.push_back(i);
  }
  const std::size_t m = rows.size();
  if (m == 0) return 0.0;
  std::vector<double> cost(m * m);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) cost[a * m + b] = -w[rows[a] * n + cols[b]];
  const auto assign = hungarian_min(cost, m);
  double total = 0.0;
  for (std::size_t a = 0; a < m; ++a) total += w[rows[a] * n + cols[assign[a]]];
  return total;
}

}  // namespace detail

// Maximum total weight assignment. Weights must be finite; rectangular inputs
// are padded with zero-weight slots. Among optimal assignments the one with
// the lexicographically smallest column sequence (row 0 first) is returned.
inline Assignment max_weight_match(const WeightMatrix& weights) {
  const std::size_t r = weights.rows();
  const std::size_t c = weights.cols();
  const std::size_t n = std::max(r, c);
  Assignment result;
  if (r == 0 || c == 0) return result;

  std::vector<double> w(n * n, 0.0);
  double scale = 1.0;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      w[i * n + j] = weights(i, j);
      scale = std::max(scale, std::abs(weights(i, j)));
    }

  std::vector<bool> row_free(n, true), col_free(n, true);
  const double optimum = detail::best_total(w, n, row_free, col_free);
  const double eps = 1e-12 * scale * static_cast<double>(n);

  // Fix rows in order, each to the smallest column that still admits an
  // optimal completion.
  std::vector<std::size_t> col_of_row(n, n);
  double fixed = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    row_free[i] = false;
    std::size_t chosen = n;
    for (std::size_t j = 0; j < n && chosen == n; ++j) {
      if (!col_free[j]) continue;
      col_free[j] = false;
      const double rest = detail::best_total(w, n, row_free, col_free);
      if (fixed + w[i * n + j] + rest >= optimum - eps) chosen = j;
      col_free[j] = true;
    }
    // Numerical fallback: cannot happen for finite weights, keep a valid
    // permutation regardless.
    if (chosen == n) {
      for (std::size_t j = 0; j < n; ++j)
        if (col_free[j]) {
          chosen = j;
          break;
        }
    }
    col_free[chosen] = false;
    col_of_row[i] = chosen;
    fixed += w[i * n + chosen];
  }

  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t j = col_of_row[i];
    if (j < c) {
      result.pairs.emplace_back(i, j);
      result.total += weights(i, j);
    }
  }
  return result;
}

}  // namespace relfuzz
