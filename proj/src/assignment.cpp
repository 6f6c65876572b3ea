#include "parksense/assignment.hpp"

#include <algorithm>
#include <cmath>

namespace parksense {
namespace {

// Hungarian method with row/column potentials for rows <= cols. Returns, for
// each row, the assigned column.
std::vector<int> hungarian(const std::vector<double>& a, std::size_t n, std::size_t m) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a[(i0 - 1) * m + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
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
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j]) row_to_col[p[j] - 1] = static_cast<int>(j - 1);
  }
  return row_to_col;
}

}  // namespace

Assignment solve_assignment(const CostMatrix& cost) {
  Assignment result;
  const std::size_t rows = cost.rows();
  const std::size_t cols = cost.cols();
  result.row_to_col.assign(rows, -1);
  if (rows == 0 || cols == 0) return result;

  // Forbidden pairs become a penalty larger than any complete set of allowed
  // pairs, so the solver first maximizes allowed matches.
  double span = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (std::isfinite(cost(r, c))) span = std::max(span, std::abs(cost(r, c)));
    }
  }
  const double penalty = (span + 1.0) * static_cast<double>(std::min(rows, cols) + 1) * 2.0;

  const bool transpose = rows > cols;
  const std::size_t n = transpose ? cols : rows;
  const std::size_t m = transpose ? rows : cols;
  std::vector<double> a(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double c = transpose ? cost(j, i) : cost(i, j);
      a[i * m + j] = std::isfinite(c) ? c : penalty;
    }
  }
  const auto match = hungarian(a, n, m);
  for (std::size_t i = 0; i < n; ++i) {
    const int j = match[i];
    if (j < 0) continue;
    const std::size_t r = transpose ? static_cast<std::size_t>(j) : i;
    const std::size_t c = transpose ? i : static_cast<std::size_t>(j);
    if (!std::isfinite(cost(r, c))) continue;
    result.row_to_col[r] = static_cast<int>(c);
    result.total_cost += cost(r, c);
  }
  return result;
}

}  // namespace parksense
