#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "embodied/kernels.hpp"

namespace embodied {

/// Default relative rank tolerance for exactly known kernels.
inline constexpr double kExactRankTol = 1e-9;
/// Default absolute rank tolerance for count-estimated internal world models.
inline constexpr double kEmpiricalRankTol = 0.05;

/// Images of the policy-polytope basis e_(s,a) = pi^f - pi^{f_(s,a)} under the
/// policy-behaviour map. Row (s, a) is beta(w; s) (alpha(w, a0; w') - alpha(w, a; w'))
/// flattened over (w, w'), w major.
struct BasisImageMatrix {
  Matrix rows;
  std::size_t reference_action = 0;
  /// (s, a) label of each row, s major, a ascending, a0 skipped.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

BasisImageMatrix basis_images(const SmlSystem& sys, std::size_t a0 = 0);

/// Basis images for the behaviour map restricted to the world states in
/// world_subset, using only sensor rows in sensor_subset. Columns are
/// (w in world_subset, w' in W).
BasisImageMatrix basis_images_restricted(const SmlSystem& sys,
                                         std::span<const std::size_t> world_subset,
                                         std::span<const std::size_t> sensor_subset,
                                         std::size_t a0 = 0);

struct DimensionReport {
  std::size_t d = 0;
  std::size_t rank_beta = 0;
  std::size_t rank_alpha = 0;
  std::size_t upper_bound = 0;
  double tolerance = kExactRankTol;
  std::vector<double> singular_values;
};

/// d = rank of the basis-image matrix, with rank(beta), rank(alpha) and the
/// product bound. rank(alpha) is the rank of the |A|-1 difference kernels
/// alpha(., a0; .) - alpha(., a; .) viewed as vectors over (w, w').
DimensionReport embodied_dimension(const SmlSystem& sys, double tol = kExactRankTol,
                                   std::size_t a0 = 0);

std::size_t beta_rank(const SmlSystem& sys, double tol = kExactRankTol);
std::size_t alpha_rank(const SmlSystem& sys, double tol = kExactRankTol, std::size_t a0 = 0);

/// Sensor states retained for a behaviour, with the fraction of observed mass
/// they cover.
struct SupportSet {
  std::vector<std::size_t> sensor_indices;  // sorted ascending
  double kept_mass = 1.0;

  std::size_t size() const { return sensor_indices.size(); }
  bool contains(std::size_t s) const;
};

struct RestrictedDimension {
  SupportSet support;
  std::size_t d = 0;
  std::vector<double> singular_values;
};

/// Restriction of the behaviour map to a set of world states: the sensor
/// support is the union of supp beta(w; .) over the subset.
RestrictedDimension restricted_dimension(const SmlSystem& sys,
                                         std::span<const std::size_t> world_subset,
                                         double tol = kExactRankTol, std::size_t a0 = 0);

/// World states whose sensor distribution lies entirely inside the support.
std::vector<std::size_t> worlds_within_support(const SmlSystem& sys, const SupportSet& support);

/// Union of supp beta(w; .) over the given worlds.
SupportSet sensor_support_of(const SmlSystem& sys, std::span<const std::size_t> world_subset);

/// Count-estimated internal world model gamma(s, a; s'): rows (s * |A| + a),
/// columns s'. Only transitions whose s^t lies in the support are counted;
/// unobserved rows stay zero.
EmpiricalKernel estimate_gamma(const Trajectory& traj, const SupportSet& support);

/// Sum over s in the support of rank(gamma(s, a0; s') - gamma(s, a; s')) with
/// rows a != a0 and columns s' in the support. Only observed (non-zero) rows
/// take part; if a0 is unobserved for some s the smallest observed action is
/// the reference for that s. Singular values above abs_tol count.
std::size_t gamma_affine_rank(const EmpiricalKernel& gamma, const SupportSet& support,
                              std::size_t a0 = 0, double abs_tol = kEmpiricalRankTol);

/// Serial reference for gamma_affine_rank.
std::size_t gamma_affine_rank_serial(const EmpiricalKernel& gamma, const SupportSet& support,
                                     std::size_t a0 = 0, double abs_tol = kEmpiricalRankTol);

/// Smallest prefix of states (by descending count, ties by ascending index)
/// whose relative frequency reaches keep_fraction.
SupportSet estimate_support(std::span<const std::uint64_t> histogram, double keep_fraction);

std::vector<std::uint64_t> sensor_histogram(const Trajectory& traj);

}  // namespace embodied
