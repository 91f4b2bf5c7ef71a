#include "embodied/behavior_dim.hpp"

#include <algorithm>
#include <numeric>

#include "embodied/error.hpp"

namespace embodied {

BasisImageMatrix basis_images_restricted(const SmlSystem& sys,
                                         std::span<const std::size_t> world_subset,
                                         std::span<const std::size_t> sensor_subset,
                                         std::size_t a0) {
  const std::size_t nw = sys.world_card(), na = sys.actuator_card();
  if (a0 >= na) throw ConfigError("basis_images: reference action out of range");
  for (std::size_t w : world_subset) {
    if (w >= nw) throw ConfigError("basis_images: world index out of range");
  }
  for (std::size_t s : sensor_subset) {
    if (s >= sys.sensor_card()) throw ConfigError("basis_images: sensor index out of range");
  }

  BasisImageMatrix out;
  out.reference_action = a0;
  for (std::size_t s : sensor_subset) {
    for (std::size_t a = 0; a < na; ++a) {
      if (a != a0) out.pairs.emplace_back(s, a);
    }
  }
  const std::size_t ncols = world_subset.size() * nw;
  out.rows = Matrix::Zero(static_cast<Eigen::Index>(out.pairs.size()),
                          static_cast<Eigen::Index>(ncols));
  const Matrix& alpha = sys.alpha().matrix();
  for (std::size_t r = 0; r < out.pairs.size(); ++r) {
    const auto [s, a] = out.pairs[r];
    for (std::size_t i = 0; i < world_subset.size(); ++i) {
      const std::size_t w = world_subset[i];
      const double b = sys.beta()(w, s);
      if (b == 0.0) continue;
      const auto dst = static_cast<Eigen::Index>(i * nw);
      out.rows.row(static_cast<Eigen::Index>(r)).segment(dst, static_cast<Eigen::Index>(nw)) =
          b * (alpha.row(static_cast<Eigen::Index>(sys.alpha_row(w, a0))) -
               alpha.row(static_cast<Eigen::Index>(sys.alpha_row(w, a))));
    }
  }
  return out;
}

BasisImageMatrix basis_images(const SmlSystem& sys, std::size_t a0) {
  std::vector<std::size_t> worlds(sys.world_card()), sensors(sys.sensor_card());
  std::iota(worlds.begin(), worlds.end(), std::size_t{0});
  std::iota(sensors.begin(), sensors.end(), std::size_t{0});
  return basis_images_restricted(sys, worlds, sensors, a0);
}

std::size_t beta_rank(const SmlSystem& sys, double tol) {
  return numerical_rank(sys.beta().matrix(), tol);
}

std::size_t alpha_rank(const SmlSystem& sys, double tol, std::size_t a0) {
  const std::size_t nw = sys.world_card(), na = sys.actuator_card();
  if (a0 >= na) throw ConfigError("alpha_rank: reference action out of range");
  if (na == 1) return 0;
  Matrix diffs = Matrix::Zero(static_cast<Eigen::Index>(na - 1), static_cast<Eigen::Index>(nw * nw));
  const Matrix& alpha = sys.alpha().matrix();
  Eigen::Index r = 0;
  for (std::size_t a = 0; a < na; ++a) {
    if (a == a0) continue;
    for (std::size_t w = 0; w < nw; ++w) {
      diffs.row(r).segment(static_cast<Eigen::Index>(w * nw), static_cast<Eigen::Index>(nw)) =
          alpha.row(static_cast<Eigen::Index>(sys.alpha_row(w, a0))) -
          alpha.row(static_cast<Eigen::Index>(sys.alpha_row(w, a)));
    }
    ++r;
  }
  return numerical_rank(diffs, tol);
}

DimensionReport embodied_dimension(const SmlSystem& sys, double tol, std::size_t a0) {
  if (!(tol > 0.0)) throw ConfigError("embodied_dimension: tolerance must be positive");
  const BasisImageMatrix images = basis_images(sys, a0);
  DimensionReport rep;
  rep.tolerance = tol;
  rep.singular_values = singular_values(images.rows);
  rep.d = numerical_rank(rep.singular_values, tol);
  rep.rank_beta = beta_rank(sys, tol);
  rep.rank_alpha = alpha_rank(sys, tol, a0);
  rep.upper_bound = rep.rank_beta * rep.rank_alpha;
  return rep;
}

bool SupportSet::contains(std::size_t s) const {
  return std::binary_search(sensor_indices.begin(), sensor_indices.end(), s);
}

SupportSet sensor_support_of(const SmlSystem& sys, std::span<const std::size_t> world_subset) {
  std::vector<bool> hit(sys.sensor_card(), false);
  for (std::size_t w : world_subset) {
    if (w >= sys.world_card()) throw ConfigError("world index out of range");
    for (std::size_t s = 0; s < sys.sensor_card(); ++s) {
      if (sys.beta()(w, s) > 0.0) hit[s] = true;
    }
  }
  SupportSet out;
  for (std::size_t s = 0; s < hit.size(); ++s) {
    if (hit[s]) out.sensor_indices.push_back(s);
  }
  out.kept_mass = 1.0;
  return out;
}

std::vector<std::size_t> worlds_within_support(const SmlSystem& sys, const SupportSet& support) {
  std::vector<std::size_t> out;
  for (std::size_t w = 0; w < sys.world_card(); ++w) {
    bool inside = true;
    for (std::size_t s = 0; s < sys.sensor_card() && inside; ++s) {
      if (sys.beta()(w, s) > 0.0 && !support.contains(s)) inside = false;
    }
    if (inside) out.push_back(w);
  }
  return out;
}

RestrictedDimension restricted_dimension(const SmlSystem& sys,
                                         std::span<const std::size_t> world_subset, double tol,
                                         std::size_t a0) {
  if (world_subset.empty()) throw ConfigError("restricted_dimension: empty world subset");
  RestrictedDimension out;
  out.support = sensor_support_of(sys, world_subset);
  const auto images = basis_images_restricted(sys, world_subset, out.support.sensor_indices, a0);
  out.singular_values = singular_values(images.rows);
  out.d = numerical_rank(out.singular_values, tol);
  return out;
}

EmpiricalKernel estimate_gamma(const Trajectory& traj, const SupportSet& support) {
  if (support.sensor_indices.empty()) throw ConfigError("estimate_gamma: empty support");
  if (traj.steps.size() < 2) throw ConfigError("estimate_gamma: trajectory needs at least 2 steps");
  const std::size_t ns = traj.sensor_card, na = traj.actuator_card;
  Matrix counts = Matrix::Zero(static_cast<Eigen::Index>(ns * na), static_cast<Eigen::Index>(ns));
  for (std::size_t t = 0; t + 1 < traj.steps.size(); ++t) {
    const Step& cur = traj.steps[t];
    if (!support.contains(cur.s)) continue;
    counts(static_cast<Eigen::Index>(cur.s * na + cur.a),
           static_cast<Eigen::Index>(traj.steps[t + 1].s)) += 1.0;
  }
  for (Eigen::Index r = 0; r < counts.rows(); ++r) {
    const double total = counts.row(r).sum();
    if (total > 0.0) counts.row(r) /= total;
  }
  return EmpiricalKernel(std::move(counts), 1e-10);
}

namespace {

std::size_t gamma_rank_at(const EmpiricalKernel& gamma, const SupportSet& support, std::size_t s,
                          std::size_t a0, double abs_tol) {
  const std::size_t ns = gamma.codomain();
  const std::size_t na = gamma.domain() / ns;
  std::vector<std::size_t> observed;
  for (std::size_t a = 0; a < na; ++a) {
    if (!gamma.row_is_empty(s * na + a)) observed.push_back(a);
  }
  if (observed.size() < 2) return 0;
  std::size_t ref = observed.front();
  if (std::find(observed.begin(), observed.end(), a0) != observed.end()) ref = a0;

  const auto& cols = support.sensor_indices;
  Matrix diffs(static_cast<Eigen::Index>(observed.size() - 1), static_cast<Eigen::Index>(cols.size()));
  Eigen::Index r = 0;
  for (std::size_t a : observed) {
    if (a == ref) continue;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      diffs(r, static_cast<Eigen::Index>(c)) =
          gamma(s * na + ref, cols[c]) - gamma(s * na + a, cols[c]);
    }
    ++r;
  }
  return numerical_rank_absolute(diffs, abs_tol);
}

void check_gamma_inputs(const EmpiricalKernel& gamma, const SupportSet& support, std::size_t a0) {
  const std::size_t ns = gamma.codomain();
  if (gamma.domain() % ns != 0) throw ConfigError("gamma_affine_rank: gamma must be (|S||A|) x |S|");
  if (a0 >= gamma.domain() / ns) throw ConfigError("gamma_affine_rank: reference action out of range");
  for (std::size_t s : support.sensor_indices) {
    if (s >= ns) throw ConfigError("gamma_affine_rank: support index out of range");
  }
}

}  // namespace

std::size_t gamma_affine_rank(const EmpiricalKernel& gamma, const SupportSet& support,
                              std::size_t a0, double abs_tol) {
  check_gamma_inputs(gamma, support, a0);
  const auto& idx = support.sensor_indices;
  const auto n = static_cast<long long>(idx.size());
  std::size_t total = 0;
#pragma omp parallel for schedule(dynamic) reduction(+ : total)
  for (long long i = 0; i < n; ++i) {
    total += gamma_rank_at(gamma, support, idx[static_cast<std::size_t>(i)], a0, abs_tol);
  }
  return total;
}

std::size_t gamma_affine_rank_serial(const EmpiricalKernel& gamma, const SupportSet& support,
                                     std::size_t a0, double abs_tol) {
  check_gamma_inputs(gamma, support, a0);
  std::size_t total = 0;
  for (std::size_t s : support.sensor_indices) total += gamma_rank_at(gamma, support, s, a0, abs_tol);
  return total;
}

SupportSet estimate_support(std::span<const std::uint64_t> histogram, double keep_fraction) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    throw ConfigError("estimate_support: keep_fraction must lie in (0, 1]");
  }
  const std::uint64_t total = std::accumulate(histogram.begin(), histogram.end(), std::uint64_t{0});
  if (total == 0) throw ConfigError("estimate_support: empty histogram");

  std::vector<std::size_t> order(histogram.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return histogram[a] > histogram[b]; });

  SupportSet out;
  std::uint64_t kept = 0;
  const double tot = static_cast<double>(total);
  for (std::size_t s : order) {
    if (histogram[s] == 0) break;
    out.sensor_indices.push_back(s);
    kept += histogram[s];
    // Relative slack so that prefix sums equal to the threshold in exact
    // arithmetic are not lost to rounding of keep_fraction.
    if (static_cast<double>(kept) / tot >= keep_fraction * (1.0 - 1e-12)) break;
  }
  std::sort(out.sensor_indices.begin(), out.sensor_indices.end());
  out.kept_mass = static_cast<double>(kept) / tot;
  return out;
}

std::vector<std::uint64_t> sensor_histogram(const Trajectory& traj) {
  std::vector<std::uint64_t> h(traj.sensor_card, 0);
  for (const auto& st : traj.steps) ++h.at(st.s);
  return h;
}

}  // namespace embodied
