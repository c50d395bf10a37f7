#pragma once

#include <vector>

#include "orl/matrix.hpp"

namespace orl {

// Rows are the items to assign, columns the slots. Solvers require
// n_rows <= n_cols and all entries finite; every row gets a distinct column.
struct CostMatrix {
  Matrix entries;

  int n_rows() const { return entries.rows(); }
  int n_cols() const { return entries.cols(); }
};

struct Assignment {
  std::vector<int> row_to_col;  // injective, one column per row
  double total_cost = 0.0;      // sum of entries at assigned cells, in row order
};

// Minimum-cost assignment via Kuhn-Munkres (shortest augmenting paths).
// Ties are broken toward the lexicographically smallest row_to_col sequence.
Assignment solve_assignment(const CostMatrix& costs);

// Exhaustive reference solver with the same tie-break. Guarded to n_rows <= 8.
Assignment brute_force_assignment(const CostMatrix& costs);

}  // namespace orl
