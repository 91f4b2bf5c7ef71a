#pragma once

#include <cstddef>
#include <vector>

#include "embodied/linalg.hpp"

namespace embodied {

struct LpResult {
  bool feasible = false;
  Vector x;
  /// Indices of the structural columns in the final basis.
  std::vector<std::size_t> basis;
  /// Phase-1 objective at termination (sum of artificial variables).
  double infeasibility = 0.0;
};

/// Basic feasible solution of {A x = b, x >= 0} by phase-1 simplex with
/// Bland's rule. The returned x has at most rank(A) non-zero entries.
LpResult find_basic_feasible_solution(const Matrix& A, const Vector& b, double eps = 1e-11);

}  // namespace embodied
