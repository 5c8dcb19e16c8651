#include <algorithm>
#include <limits>

#include "common/error.hpp"
#include "motion/trajectory.hpp"

namespace gm::motion {

// Hungarian method with row/column potentials, O(n^3).
std::vector<std::size_t> solve_assignment(const std::vector<double>& cost, std::size_t n) {
  if (cost.size() != n * n) throw Error(ErrorCode::InvalidArgument, "assignment cost matrix is not n x n");
  if (n == 0) return {};
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), way_cost(n + 1);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);  // match[col] = row, 1-based, 0 = free
  std::vector<bool> used(n + 1);
  for (std::size_t row = 1; row <= n; ++row) {
    match[0] = row;
    std::size_t col0 = 0;
    std::fill(way_cost.begin(), way_cost.end(), inf);
    std::fill(used.begin(), used.end(), false);
    do {
      used[col0] = true;
      const std::size_t r = match[col0];
      double delta = inf;
      std::size_t col1 = 0;
      for (std::size_t c = 1; c <= n; ++c) {
        if (used[c]) continue;
        const double reduced = cost[(r - 1) * n + (c - 1)] - u[r] - v[c];
        if (reduced < way_cost[c]) {
          way_cost[c] = reduced;
          way[c] = col0;
        }
        if (way_cost[c] < delta) {
          delta = way_cost[c];
          col1 = c;
        }
      }
      for (std::size_t c = 0; c <= n; ++c) {
        if (used[c]) {
          u[match[c]] += delta;
          v[c] -= delta;
        } else {
          way_cost[c] -= delta;
        }
      }
      col0 = col1;
    } while (match[col0] != 0);
    do {
      const std::size_t col1 = way[col0];
      match[col0] = match[col1];
      col0 = col1;
    } while (col0 != 0);
  }
  std::vector<std::size_t> result(n);
  for (std::size_t c = 1; c <= n; ++c) result[match[c] - 1] = c - 1;
  return result;
}

}  // namespace gm::motion
