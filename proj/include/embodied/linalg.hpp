#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

namespace embodied {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Singular values spread below this are treated as an exactly zero matrix,
/// whatever the relative tolerance says.
inline constexpr double kRankAbsoluteFloor = 1e-13;

/// Singular values in descending order.
std::vector<double> singular_values(const Matrix& m);

/// Count of singular values strictly above rel_tol * sigma_max.
std::size_t numerical_rank(const std::vector<double>& sv, double rel_tol);
std::size_t numerical_rank(const Matrix& m, double rel_tol);

/// Count of singular values strictly above an absolute threshold.
std::size_t numerical_rank_absolute(const Matrix& m, double abs_tol);

/// Orthonormal basis (as columns) of the row space of m, using the same
/// relative cutoff as numerical_rank.
Matrix row_space_basis(const Matrix& m, double rel_tol);

}  // namespace embodied
