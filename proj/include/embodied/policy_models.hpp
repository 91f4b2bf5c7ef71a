#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "embodied/behavior_dim.hpp"
#include "embodied/kernels.hpp"

namespace embodied {

/// Coordinates of the policy-behaviour map: column (s * |A| + a) of E is the
/// behaviour contribution of the pair (s, a) expressed in an orthonormal basis
/// of the span of the basis images.
struct EmbodimentMatrix {
  Matrix E;      // d x (|S| |A|)
  Matrix basis;  // (|W| |W|) x d, orthonormal columns
  std::size_t sensor_card = 0;
  std::size_t actuator_card = 0;

  std::size_t dim() const { return static_cast<std::size_t>(E.rows()); }
};

EmbodimentMatrix embodiment_matrix(const SmlSystem& sys, double tol = kExactRankTol);

/// Row-major flattening of a policy, index s * |A| + a.
Vector vec_policy(const StochasticKernel& pi);

/// pi_theta(s; a) proportional to exp(theta . E(s, a)).
StochasticKernel expfam_policy(const EmbodimentMatrix& E, const Vector& theta);

/// Largest absolute entry of behavior_map(a) - behavior_map(b).
double behavior_gap(const SmlSystem& sys, const StochasticKernel& a, const StochasticKernel& b);

struct ExpFamFit {
  Vector theta;
  double gradient_norm = 0.0;  // infinity norm of the moment residual
  double behavior_gap = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Moment matching E vec(pi_theta) = E vec(target) by damped Newton on the
/// convex log-partition objective. Boundary targets are reported with the
/// best theta found and converged = false.
ExpFamFit fit_expfam(const SmlSystem& sys, const EmbodimentMatrix& E,
                     const StochasticKernel& target, double tol = 1e-10,
                     std::size_t max_iters = 200);

/// Per sensor state, the allowed actions (sorted, non-empty).
struct FacePattern {
  std::vector<std::vector<std::size_t>> allowed;

  std::size_t dimension() const;
  friend bool operator==(const FacePattern&, const FacePattern&) = default;
};

/// Visits every face pattern of the given dimension in lexicographic order.
void for_each_face(std::size_t sensor_card, std::size_t actuator_card, std::size_t dim,
                   const std::function<void(const FacePattern&)>& visit);
std::vector<FacePattern> enumerate_faces(std::size_t sensor_card, std::size_t actuator_card,
                                         std::size_t dim);

struct SparseRepresentative {
  StochasticKernel policy;
  std::size_t nonzeros = 0;    // non-zero entries over the support rows
  std::size_t budget = 0;      // |S| + d^S
  std::size_t restricted_dim = 0;
  double behavior_gap = 0.0;   // over worlds whose sensor support lies in S
};

/// Policy with at most |S| + d^S non-zero entries on the support rows and the
/// same restricted behaviour as the target. Rows outside the support are
/// copied from the target.
SparseRepresentative sparse_representative(const SmlSystem& sys, const StochasticKernel& target,
                                           const SupportSet& support, double tol = kExactRankTol);

/// Support covering every sensor state.
SupportSet full_support(std::size_t sensor_card);

}  // namespace embodied
