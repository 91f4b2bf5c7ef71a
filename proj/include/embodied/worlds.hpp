#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "embodied/json_io.hpp"
#include "embodied/kernels.hpp"

namespace embodied {

/// A P-phase walker on a circular track of length L. The sensor reads the
/// phase; the correct action gait(p) advances the phase, anything else leaves
/// it in place; completing a cycle moves the walker one position forward.
struct CyclicWalkerConfig {
  std::size_t phases = 6;
  std::size_t actions = 3;
  std::size_t track_length = 100;
  std::vector<std::size_t> gait;  // empty: gait(p) = p mod actions
  double slip_prob = 0.0;
  std::uint64_t seed = 0;

  /// Gait with defaults filled in.
  std::vector<std::size_t> resolved_gait() const;
  void check() const;
};

json to_json(const CyclicWalkerConfig& cfg);
CyclicWalkerConfig walker_config_from_json(const json& j);

struct WalkerSystem {
  CyclicWalkerConfig config;
  SmlSystem sml;
  StochasticKernel alpha_s;          // (phase, action) -> phase
  StochasticKernel scripted_policy;  // phase -> gait(phase)
  std::size_t optimal_distance_per_cycle = 1;

  std::size_t world_index(std::size_t phase, std::size_t position) const {
    return position * config.phases + phase;
  }
  std::size_t phase_of(std::size_t w) const { return w % config.phases; }
  std::size_t position_of(std::size_t w) const { return w / config.phases; }
};

WalkerSystem make_cyclic_walker(const CyclicWalkerConfig& cfg);

/// Net forward strides over the world sequence of a walker trajectory.
long long walker_performance(const Trajectory& traj, const WalkerSystem& walker);

struct RandomSml {
  SmlSystem sys;
  std::size_t rank_beta = 0;
  std::size_t rank_alpha = 0;
};

/// Random loop with beta = F G of rank target_rank_beta and alpha rows mixing
/// target_rank_alpha + 1 random vertex kernels. With decoupled = true the
/// action-dependent part of alpha does not depend on w, which makes the
/// embodied dimension equal rank(beta) rank(alpha).
RandomSml make_random_sml(std::size_t world_card, std::size_t sensor_card, std::size_t actuator_card,
                          std::size_t target_rank_beta, std::size_t target_rank_alpha,
                          std::uint64_t seed, bool decoupled = false);

/// Random row-stochastic kernel with entries drawn from Exp(1).
StochasticKernel random_kernel(std::size_t domain, std::size_t codomain, Rng& rng);

/// (1 - epsilon) base + epsilon uniform.
StochasticKernel epsilon_greedy(const StochasticKernel& base, double epsilon);

}  // namespace embodied
