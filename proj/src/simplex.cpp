#include "embodied/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "embodied/error.hpp"

namespace embodied {

namespace {

void pivot(Matrix& t, Eigen::Index row, Eigen::Index col) {
  t.row(row) /= t(row, col);
  for (Eigen::Index r = 0; r < t.rows(); ++r) {
    if (r == row) continue;
    const double f = t(r, col);
    if (f != 0.0) t.row(r) -= f * t.row(row);
  }
}

}  // namespace

LpResult find_basic_feasible_solution(const Matrix& A, const Vector& b, double eps) {
  const Eigen::Index m = A.rows(), n = A.cols();
  if (b.size() != m) throw ConfigError("simplex: right-hand side has wrong length");
  LpResult res;
  res.x = Vector::Zero(n);
  if (m == 0) {
    res.feasible = true;
    return res;
  }

  // Tableau columns: n structural, m artificial, then the right-hand side.
  // The last row holds the reduced costs of the phase-1 objective.
  Matrix t = Matrix::Zero(m + 1, n + m + 1);
  for (Eigen::Index r = 0; r < m; ++r) {
    const double sign = b(r) < 0.0 ? -1.0 : 1.0;
    t.row(r).head(n) = sign * A.row(r);
    t(r, n + r) = 1.0;
    t(r, n + m) = sign * b(r);
  }
  for (Eigen::Index r = 0; r < m; ++r) t.row(m) -= t.row(r);
  for (Eigen::Index r = 0; r < m; ++r) t(m, n + r) = 0.0;

  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  for (Eigen::Index r = 0; r < m; ++r) basis[static_cast<std::size_t>(r)] = n + r;

  const std::size_t max_iters = 50 * static_cast<std::size_t>(n + m) + 1000;
  for (std::size_t it = 0;; ++it) {
    if (it > max_iters) throw NumericError("simplex: iteration limit reached");
    Eigen::Index enter = -1;
    for (Eigen::Index c = 0; c < n + m; ++c) {
      if (t(m, c) < -eps) {
        enter = c;
        break;
      }
    }
    if (enter < 0) break;
    Eigen::Index leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index r = 0; r < m; ++r) {
      if (t(r, enter) <= eps) continue;
      const double ratio = t(r, n + m) / t(r, enter);
      if (ratio < best - 1e-15 ||
          (std::abs(ratio - best) <= 1e-15 &&
           basis[static_cast<std::size_t>(r)] < basis[static_cast<std::size_t>(leave)])) {
        best = ratio;
        leave = r;
      }
    }
    if (leave < 0) throw NumericError("simplex: phase-1 problem unbounded");
    pivot(t, leave, enter);
    basis[static_cast<std::size_t>(leave)] = enter;
  }

  res.infeasibility = -t(m, n + m);
  const double scale = 1.0 + b.cwiseAbs().maxCoeff();
  res.feasible = res.infeasibility <= 1e-9 * scale;
  if (!res.feasible) return res;

  // Drive artificial variables out of the basis where a structural pivot
  // exists; rows without one are redundant constraints.
  for (Eigen::Index r = 0; r < m; ++r) {
    if (basis[static_cast<std::size_t>(r)] < n) continue;
    for (Eigen::Index c = 0; c < n; ++c) {
      if (std::abs(t(r, c)) > 1e-9) {
        pivot(t, r, c);
        basis[static_cast<std::size_t>(r)] = c;
        break;
      }
    }
  }

  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Index c = basis[static_cast<std::size_t>(r)];
    if (c >= n) continue;
    res.basis.push_back(static_cast<std::size_t>(c));
  }
  std::sort(res.basis.begin(), res.basis.end());

  // Re-solve the basic columns directly to shed accumulated pivoting error.
  if (!res.basis.empty()) {
    Matrix Ab(m, static_cast<Eigen::Index>(res.basis.size()));
    for (std::size_t i = 0; i < res.basis.size(); ++i) {
      Ab.col(static_cast<Eigen::Index>(i)) = A.col(static_cast<Eigen::Index>(res.basis[i]));
    }
    const Vector xb = Ab.colPivHouseholderQr().solve(b);
    for (std::size_t i = 0; i < res.basis.size(); ++i) {
      res.x(static_cast<Eigen::Index>(res.basis[i])) = std::max(0.0, xb(static_cast<Eigen::Index>(i)));
    }
  }
  return res;
}

}  // namespace embodied
