#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <limits>
#include <stdexcept>
#include <vector>

namespace sgar {

// Result of a rectangular linear assignment with rows <= columns: row i is
// matched to column col_for_row[i]; total_cost sums the selected entries.
struct Assignment {
  std::vector<int> col_for_row;
  double total_cost = 0.0;
};

namespace detail {

// Augmenting search (Kuhn) over a row -> columns adjacency, restricted to
// allowed columns.
inline bool kuhn_row(int row, const std::vector<std::vector<int>>& adj,
                     std::vector<int>& owner_row, std::vector<char>& visited,
                     const std::vector<char>& col_allowed) {
  for (int j : adj[row]) {
    if (!col_allowed[j] || visited[j]) continue;
    visited[j] = 1;
    if (owner_row[j] < 0 ||
        kuhn_row(owner_row[j], adj, owner_row, visited, col_allowed)) {
      owner_row[j] = row;
      return true;
    }
  }
  return false;
}

// Same search from the column side, over a column -> rows adjacency.
inline bool kuhn_col(int col, const std::vector<std::vector<int>>& radj,
                     std::vector<int>& owner_col, std::vector<char>& visited) {
  for (int i : radj[col]) {
    if (visited[i]) continue;
    visited[i] = 1;
    if (owner_col[i] < 0 || kuhn_col(owner_col[i], radj, owner_col, visited)) {
      owner_col[i] = col;
      return true;
    }
  }
  return false;
}

// True when rows next_row..R-1 can all be matched into unused tight columns
// while every column in `required` is also covered by one of those rows.
// Saturating each side separately implies a single matching saturating both
// (Mendelsohn-Dulmage), so the two checks together are exact.
inline bool completion_exists(int next_row, int R, int C,
                              const std::vector<std::vector<int>>& tight,
                              const std::vector<char>& used_col,
                              const std::vector<int>& required) {
  std::vector<char> col_ok(C);
  for (int j = 0; j < C; ++j) col_ok[j] = !used_col[j];

  std::vector<int> owner_row(C, -1);
  for (int i = next_row; i < R; ++i) {
    std::vector<char> visited(C, 0);
    if (!kuhn_row(i, tight, owner_row, visited, col_ok)) return false;
  }

  if (!required.empty()) {
    std::vector<std::vector<int>> radj(C);
    for (int i = next_row; i < R; ++i) {
      for (int j : tight[i]) radj[j].push_back(i);
    }
    std::vector<int> owner_col(R, -1);
    for (int j : required) {
      std::vector<char> visited(R, 0);
      if (!kuhn_col(j, radj, owner_col, visited)) return false;
    }
  }
  return true;
}

}  // namespace detail

// Optimal assignment of every row to a distinct column, minimizing total
// cost, by shortest augmenting paths on the reduced costs (O(R^2 C)).
// Among cost-optimal assignments the result is the lexicographically
// smallest col_for_row vector: the optimal duals certify which edges can
// appear in any optimum, and a greedy pass picks the smallest feasible
// column per row. Throws std::invalid_argument when rows exceed columns or
// any entry is non-finite.
template <typename Derived>
Assignment solve_assignment(const Eigen::MatrixBase<Derived>& cost_expr) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Mat cost = cost_expr;
  const int R = static_cast<int>(cost.rows());
  const int C = static_cast<int>(cost.cols());
  if (R == 0) return {};
  if (R > C) {
    throw std::invalid_argument("solve_assignment: cost matrix has more rows than columns");
  }
  if (!cost.allFinite()) {
    throw std::invalid_argument("solve_assignment: cost matrix has non-finite entries");
  }

  const Scalar INF = std::numeric_limits<Scalar>::infinity();
  std::vector<Scalar> u(R, Scalar(0)), v(C, Scalar(0)), shortest(C);
  std::vector<int> col4row(R, -1), row4col(C, -1), path_row(C);
  std::vector<char> done(C);

  for (int cur = 0; cur < R; ++cur) {
    std::fill(shortest.begin(), shortest.end(), INF);
    std::fill(done.begin(), done.end(), 0);
    std::fill(path_row.begin(), path_row.end(), -1);

    Scalar dist = 0;
    int i = cur;
    int sink = -1;
    while (sink < 0) {
      Scalar lowest = INF;
      int jbest = -1;
      for (int j = 0; j < C; ++j) {
        if (done[j]) continue;
        const Scalar r = dist + cost(i, j) - u[i] - v[j];
        if (r < shortest[j]) {
          shortest[j] = r;
          path_row[j] = i;
        }
        if (shortest[j] < lowest ||
            (shortest[j] == lowest && jbest >= 0 && row4col[jbest] >= 0 &&
             row4col[j] < 0)) {
          lowest = shortest[j];
          jbest = j;
        }
      }
      if (jbest < 0) {
        throw std::logic_error("solve_assignment: no reachable column");
      }
      dist = lowest;
      done[jbest] = 1;
      if (row4col[jbest] < 0) {
        sink = jbest;
      } else {
        i = row4col[jbest];
      }
    }

    u[cur] += dist;
    for (int k = 0; k < R; ++k) {
      if (k != cur && col4row[k] >= 0 && done[col4row[k]]) {
        u[k] += dist - shortest[col4row[k]];
      }
    }
    for (int j = 0; j < C; ++j) {
      if (done[j]) v[j] -= dist - shortest[j];
    }

    int j = sink;
    while (true) {
      const int r = path_row[j];
      row4col[j] = r;
      std::swap(col4row[r], j);
      if (r == cur) break;
    }
  }

  // Tie normalization. A column is tight for a row when its reduced cost
  // vanishes; every optimal assignment uses only tight edges and covers
  // every column the duals price strictly below zero (columns are free, so
  // unassigned ones sit at price zero). When some row has a choice, walk
  // rows in order and fix the smallest tight column that still leaves a
  // valid completion.
  const Scalar scale = std::max(Scalar(1), cost.size() > 0 ? cost.cwiseAbs().maxCoeff() : Scalar(0));
  const Scalar tol = Scalar(1e-11) * scale;

  std::vector<std::vector<int>> tight(R);
  bool any_choice = false;
  for (int i = 0; i < R; ++i) {
    for (int j = 0; j < C; ++j) {
      if (j == col4row[i] || cost(i, j) - u[i] - v[j] <= tol) tight[i].push_back(j);
    }
    if (tight[i].size() > 1) any_choice = true;
  }

  if (any_choice) {
    std::vector<int> required;
    for (int j = 0; j < C; ++j) {
      if (v[j] < -tol) required.push_back(j);
    }

    std::vector<int> result(R, -1);
    std::vector<char> used(C, 0);
    bool complete = true;
    for (int i = 0; i < R && complete; ++i) {
      for (int j : tight[i]) {
        if (used[j]) continue;
        used[j] = 1;
        std::vector<int> still_required;
        for (int q : required) {
          if (!used[q]) still_required.push_back(q);
        }
        if (detail::completion_exists(i + 1, R, C, tight, used, still_required)) {
          result[i] = j;
          break;
        }
        used[j] = 0;
      }
      complete = result[i] >= 0;
    }
    if (complete) col4row = result;
  }

  Assignment out;
  out.col_for_row = std::move(col4row);
  double total = 0.0;
  for (int i = 0; i < R; ++i) total += static_cast<double>(cost(i, out.col_for_row[i]));
  out.total_cost = total;
  return out;
}

// Exhaustive reference for small instances (at most 9 columns). Enumerates
// column choices in lexicographic row-major order and keeps the first
// strictly-better assignment, so ties resolve to the lexicographically
// smallest mapping. Independent of solve_assignment by construction.
inline Assignment brute_force_assignment(const Eigen::Ref<const Eigen::MatrixXd>& cost) {
  const int R = static_cast<int>(cost.rows());
  const int C = static_cast<int>(cost.cols());
  if (R == 0) return {};
  if (R > C) {
    throw std::invalid_argument("brute_force_assignment: cost matrix has more rows than columns");
  }
  if (C > 9) {
    throw std::invalid_argument("brute_force_assignment: exhaustive search limited to 9 columns");
  }
  if (!cost.allFinite()) {
    throw std::invalid_argument("brute_force_assignment: cost matrix has non-finite entries");
  }

  std::vector<int> current(R, -1), best;
  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<char> used(C, 0);

  auto rec = [&](auto&& self, int row, double acc) -> void {
    if (row == R) {
      if (acc < best_cost) {
        best_cost = acc;
        best = current;
      }
      return;
    }
    for (int j = 0; j < C; ++j) {
      if (used[j]) continue;
      used[j] = 1;
      current[row] = j;
      self(self, row + 1, acc + cost(row, j));
      used[j] = 0;
    }
  };
  rec(rec, 0, 0.0);

  Assignment out;
  out.col_for_row = std::move(best);
  out.total_cost = best_cost;
  return out;
}

}  // namespace sgar
