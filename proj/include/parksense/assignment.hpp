#pragma once

#include <cstddef>
#include <limits>
#include <vector>

namespace parksense {

/// Dense row-major cost matrix. +infinity marks a forbidden pair.
class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline constexpr double kForbidden = std::numeric_limits<double>::infinity();

struct Assignment {
  std::vector<int> row_to_col;  // -1 when a row is left unmatched
  double total_cost = 0.0;      // over matched, allowed pairs only
};

/// Minimum-cost rectangular assignment (Hungarian method with potentials).
/// Among matchings it first maximizes the number of allowed pairs, then
/// minimizes their summed cost. Forbidden pairs never appear in the result.
Assignment solve_assignment(const CostMatrix& cost);

}  // namespace parksense
