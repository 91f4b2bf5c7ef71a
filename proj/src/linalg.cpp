#include "embodied/linalg.hpp"

#include <Eigen/SVD>
#include <algorithm>

namespace embodied {

std::vector<double> singular_values(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) return {};
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  const Eigen::VectorXd& s = svd.singularValues();
  return {s.data(), s.data() + s.size()};
}

std::size_t numerical_rank(const std::vector<double>& sv, double rel_tol) {
  if (sv.empty()) return 0;
  const double smax = *std::max_element(sv.begin(), sv.end());
  if (smax <= kRankAbsoluteFloor) return 0;
  const double cut = rel_tol * smax;
  return static_cast<std::size_t>(
      std::count_if(sv.begin(), sv.end(), [cut](double s) { return s > cut; }));
}

std::size_t numerical_rank(const Matrix& m, double rel_tol) {
  return numerical_rank(singular_values(m), rel_tol);
}

std::size_t numerical_rank_absolute(const Matrix& m, double abs_tol) {
  const auto sv = singular_values(m);
  return static_cast<std::size_t>(
      std::count_if(sv.begin(), sv.end(), [abs_tol](double s) { return s > abs_tol; }));
}

Matrix row_space_basis(const Matrix& m, double rel_tol) {
  if (m.rows() == 0 || m.cols() == 0) return Matrix(m.cols(), 0);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const std::vector<double> sv(s.data(), s.data() + s.size());
  const auto r = static_cast<Eigen::Index>(numerical_rank(sv, rel_tol));
  return svd.matrixV().leftCols(r);
}

}  // namespace embodied
