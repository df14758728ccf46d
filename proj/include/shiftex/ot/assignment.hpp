#pragma once

#include <limits>
#include <vector>

#include "shiftex/dataset.hpp"

namespace shiftex::ot {

/// Minimum-cost perfect matching on a square cost matrix.
///
/// Shortest augmenting path variant of the Hungarian method with dual
/// potentials, O(n^3). Returns col_of_row. Ties resolve deterministically
/// (first minimum found in column order).
inline std::vector<std::size_t> solve_assignment(const Matrix& cost) {
  if (cost.rows() != cost.cols()) throw InvalidArgument("assignment: cost matrix must be square");
  const auto n = static_cast<std::size_t>(cost.rows());
  constexpr double inf = std::numeric_limits<double>::infinity();

  // 1-based internal arrays; index 0 is the virtual root column.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> row_of_col(n + 1, 0), way(n + 1, 0);

  for (std::size_t i = 1; i <= n; ++i) {
    row_of_col[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = row_of_col[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) - u[i0] - v[j];
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
          u[row_of_col[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (row_of_col[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      row_of_col[j0] = row_of_col[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::size_t> col_of_row(n);
  for (std::size_t j = 1; j <= n; ++j) col_of_row[row_of_col[j] - 1] = j - 1;
  return col_of_row;
}

}  // namespace shiftex::ot
