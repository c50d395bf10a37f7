#include "orl/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace orl {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_input(const CostMatrix& costs) {
  if (costs.n_rows() < 1) throw ValidationError("assignment: cost matrix needs at least one row");
  if (costs.n_cols() < costs.n_rows())
    throw ValidationError("assignment: need n_cols >= n_rows (pad before solving)");
  if (!costs.entries.all_finite()) throw ValidationError("assignment: entries must be finite");
}

// Sum of assigned cells in row order. Both solvers report cost through this
// exact summation so their results compare bit-for-bit.
double assignment_cost(const Matrix& entries, const std::vector<int>& row_to_col) {
  double total = 0.0;
  for (std::size_t r = 0; r < row_to_col.size(); ++r) {
    total += entries(static_cast<int>(r), row_to_col[r]);
  }
  return total;
}

struct HungarianResult {
  std::vector<int> row_to_col;  // for all n padded rows
  std::vector<double> row_potential;
  std::vector<double> col_potential;
};

// Shortest-augmenting-path Kuhn-Munkres on the square problem obtained by
// padding with zero-cost virtual rows (indices >= n_real). Maintains feasible
// potentials u, v with u[i] + v[j] <= cost(i,j), tight on matched edges.
HungarianResult run_hungarian(const Matrix& entries, int n_real, int n) {
  auto cost = [&](int i, int j) { return i < n_real ? entries(i, j) : 0.0; };

  // 1-based arrays; match[j] = row matched to column j, 0 = free
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> min_slack(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      int j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double reduced = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (reduced < min_slack[j]) {
          min_slack[j] = reduced;
          way[j] = j0;
        }
        if (min_slack[j] < delta) {
          delta = min_slack[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          min_slack[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  HungarianResult result;
  result.row_to_col.assign(n, -1);
  result.row_potential.assign(n, 0.0);
  result.col_potential.assign(n, 0.0);
  for (int j = 1; j <= n; ++j) {
    if (match[j] != 0) result.row_to_col[match[j] - 1] = j - 1;
  }
  for (int i = 1; i <= n; ++i) result.row_potential[i - 1] = u[i];
  for (int j = 1; j <= n; ++j) result.col_potential[j - 1] = v[j];
  return result;
}

// Kuhn's augmenting path over the tight-edge graph.
bool augment(const std::vector<std::vector<int>>& adjacency, int row,
             const std::vector<char>& col_blocked, std::vector<int>& col_owner,
             std::vector<char>& visited) {
  for (int j : adjacency[row]) {
    if (col_blocked[j] || visited[j]) continue;
    visited[j] = 1;
    if (col_owner[j] < 0 || augment(adjacency, col_owner[j], col_blocked, col_owner, visited)) {
      col_owner[j] = row;
      return true;
    }
  }
  return false;
}

// Can every row in rows_left be matched to an unblocked column?
bool can_complete(const std::vector<std::vector<int>>& adjacency, const std::vector<int>& rows_left,
                  const std::vector<char>& col_blocked, int n) {
  std::vector<int> col_owner(n, -1);
  std::vector<char> visited(n, 0);
  for (int row : rows_left) {
    std::fill(visited.begin(), visited.end(), 0);
    if (!augment(adjacency, row, col_blocked, col_owner, visited)) return false;
  }
  return true;
}

}  // namespace

Assignment solve_assignment(const CostMatrix& costs) {
  check_input(costs);
  const int n_real = costs.n_rows();
  const int n = costs.n_cols();
  const auto hungarian = run_hungarian(costs.entries, n_real, n);

  // Every minimum-cost assignment lives inside the tight-edge graph of the
  // optimal potentials (complementary slackness), so walking that graph and
  // fixing rows greedily yields the lexicographically smallest optimum.
  double scale = 1.0;
  for (double v : costs.entries.flat()) scale = std::max(scale, std::abs(v));
  const double eps = 1e-9 * scale;
  auto cost = [&](int i, int j) { return i < n_real ? costs.entries(i, j) : 0.0; };

  std::vector<std::vector<int>> tight(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (cost(i, j) - hungarian.row_potential[i] - hungarian.col_potential[j] <= eps) {
        tight[i].push_back(j);
      }
    }
  }

  Assignment result;
  result.row_to_col.assign(n_real, -1);
  std::vector<char> col_taken(n, 0);
  bool refined = true;
  for (int i = 0; i < n_real && refined; ++i) {
    std::vector<int> rows_left;
    for (int r = i + 1; r < n; ++r) rows_left.push_back(r);
    refined = false;
    for (int j : tight[i]) {
      if (col_taken[j]) continue;
      col_taken[j] = 1;
      if (can_complete(tight, rows_left, col_taken, n)) {
        result.row_to_col[i] = j;
        refined = true;
        break;
      }
      col_taken[j] = 0;
    }
  }
  if (!refined) {
    // tolerance knocked an optimal edge out of the tight graph; the direct
    // matching is still optimal, just without the lexicographic guarantee
    for (int i = 0; i < n_real; ++i) result.row_to_col[i] = hungarian.row_to_col[i];
  }
  result.total_cost = assignment_cost(costs.entries, result.row_to_col);
  return result;
}

Assignment brute_force_assignment(const CostMatrix& costs) {
  check_input(costs);
  if (costs.n_rows() > 8)
    throw ValidationError("brute_force_assignment: factorial guard allows at most 8 rows");

  const int n_rows = costs.n_rows();
  const int n_cols = costs.n_cols();
  Assignment best;
  best.total_cost = kInf;
  std::vector<int> current(n_rows, -1);
  std::vector<char> used(n_cols, 0);

  // Columns tried in ascending order at every depth, so mappings are visited
  // in lexicographic order and a strict comparison keeps the smallest tie.
  auto recurse = [&](auto&& self, int row) -> void {
    if (row == n_rows) {
      const double total = assignment_cost(costs.entries, current);
      if (total < best.total_cost) {
        best.total_cost = total;
        best.row_to_col = current;
      }
      return;
    }
    for (int j = 0; j < n_cols; ++j) {
      if (used[j]) continue;
      used[j] = 1;
      current[row] = j;
      self(self, row + 1);
      used[j] = 0;
    }
  };
  recurse(recurse, 0);
  return best;
}

}  // namespace orl
