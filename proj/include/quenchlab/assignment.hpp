#pragma once

#include <cstddef>
#include <vector>

namespace quenchlab {

struct Assignment {
  // row i is matched to column col_of_row[i]
  std::vector<std::size_t> col_of_row;
  double cost = 0.0;
};

// Minimum-cost perfect matching for an n x n cost matrix stored row-major
// (Hungarian method with potentials, O(n^3)).
Assignment solve_assignment(const std::vector<double>& cost, std::size_t n);

}  // namespace quenchlab
