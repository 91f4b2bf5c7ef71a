#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "embodied/linalg.hpp"
#include "embodied/rng.hpp"

namespace embodied {

/// Row-sum slack accepted when a kernel is built in memory.
inline constexpr double kConstructionRowTol = 1e-12;
/// Row-sum slack accepted when a kernel is read from text.
inline constexpr double kIngestionRowTol = 1e-9;

struct StateSpace {
  std::string name;
  std::size_t cardinality = 1;

  static StateSpace make(std::string name, std::size_t cardinality);
};

/// Dense row-major Markov kernel: every row is a probability vector.
class StochasticKernel {
 public:
  explicit StochasticKernel(Matrix probs, double row_tol = kConstructionRowTol);

  static StochasticKernel uniform(std::size_t domain, std::size_t codomain);
  /// Row r puts all mass on targets[r].
  static StochasticKernel deterministic(std::span<const std::size_t> targets,
                                        std::size_t codomain);

  std::size_t domain() const { return static_cast<std::size_t>(probs_.rows()); }
  std::size_t codomain() const { return static_cast<std::size_t>(probs_.cols()); }
  double operator()(std::size_t r, std::size_t c) const { return probs_(r, c); }
  std::span<const double> row(std::size_t r) const {
    return {probs_.data() + r * codomain(), codomain()};
  }
  const Matrix& matrix() const { return probs_; }

  friend bool operator==(const StochasticKernel& a, const StochasticKernel& b) {
    return a.probs_ == b.probs_;
  }

 private:
  Matrix probs_;
};

/// Kernel estimated from counts: rows are probability vectors or all zero.
class EmpiricalKernel {
 public:
  explicit EmpiricalKernel(Matrix probs, double row_tol = kConstructionRowTol);

  std::size_t domain() const { return static_cast<std::size_t>(probs_.rows()); }
  std::size_t codomain() const { return static_cast<std::size_t>(probs_.cols()); }
  double operator()(std::size_t r, std::size_t c) const { return probs_(r, c); }
  bool row_is_empty(std::size_t r) const;
  const Matrix& matrix() const { return probs_; }

  friend bool operator==(const EmpiricalKernel& a, const EmpiricalKernel& b) {
    return a.probs_ == b.probs_;
  }

 private:
  Matrix probs_;
};

/// A finite sensorimotor loop: sensor kernel beta (W -> S), world kernel
/// alpha ((W x A) -> W, rows in (w, a) order with w major) and the initial
/// world distribution.
class SmlSystem {
 public:
  SmlSystem(StateSpace world, StateSpace sensor, StateSpace actuator, StochasticKernel beta,
            StochasticKernel alpha, std::vector<double> init_world,
            double row_tol = kConstructionRowTol);

  const StateSpace& world() const { return world_; }
  const StateSpace& sensor() const { return sensor_; }
  const StateSpace& actuator() const { return actuator_; }
  std::size_t world_card() const { return world_.cardinality; }
  std::size_t sensor_card() const { return sensor_.cardinality; }
  std::size_t actuator_card() const { return actuator_.cardinality; }
  const StochasticKernel& beta() const { return beta_; }
  const StochasticKernel& alpha() const { return alpha_; }
  const std::vector<double>& init_world() const { return init_world_; }

  std::size_t alpha_row(std::size_t w, std::size_t a) const {
    return w * actuator_.cardinality + a;
  }

  /// Throws ConfigError unless pi maps sensor states to actuator states.
  void check_policy(const StochasticKernel& pi) const;

 private:
  StateSpace world_;
  StateSpace sensor_;
  StateSpace actuator_;
  StochasticKernel beta_;
  StochasticKernel alpha_;
  std::vector<double> init_world_;
};

struct Step {
  std::size_t w = 0;
  std::size_t s = 0;
  std::size_t a = 0;
  friend bool operator==(const Step&, const Step&) = default;
};

/// w^0, s^0, a^0, w^1, ..., s^{T-1}, a^{T-1}, w^T. steps[t] holds (w^t, s^t, a^t);
/// final_world is w^T.
struct Trajectory {
  std::vector<Step> steps;
  std::size_t final_world = 0;
  std::uint64_t seed = 0;
  std::size_t world_card = 0;
  std::size_t sensor_card = 0;
  std::size_t actuator_card = 0;

  /// World sequence of length steps.size() + 1.
  std::vector<std::size_t> worlds() const;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// One-step joint kernel w -> (s, a, w'); column index (s * |A| + a) * |W| + w'.
StochasticKernel one_step_mechanism(const SmlSystem& sys, const StochasticKernel& pi);

/// Behaviour kernel w -> w', summing the joint over (s, a). Rows are evaluated
/// in parallel.
StochasticKernel behavior_map(const SmlSystem& sys, const StochasticKernel& pi);

/// Serial reference for behavior_map: the plain triple sum.
StochasticKernel behavior_map_serial(const SmlSystem& sys, const StochasticKernel& pi);

/// Chooses an actuator state for a sensor state.
using ActionSampler = std::function<std::size_t(std::size_t sensor, Rng& rng)>;

Trajectory simulate(const SmlSystem& sys, const StochasticKernel& pi, std::size_t steps,
                    std::uint64_t seed);

/// Closed-loop simulation with an arbitrary action sampler (for policies that
/// are not stored as kernels, such as CRBMs).
Trajectory simulate_with(const SmlSystem& sys, const ActionSampler& choose, std::size_t steps,
                         std::uint64_t seed);

/// Starts from a given world state instead of drawing w^0.
Trajectory simulate_from(const SmlSystem& sys, const ActionSampler& choose, std::size_t w0,
                         std::size_t steps, std::uint64_t seed);

/// Element-wise convex combination lambda * a + (1 - lambda) * b.
StochasticKernel mix(const StochasticKernel& a, const StochasticKernel& b, double lambda);

}  // namespace embodied
