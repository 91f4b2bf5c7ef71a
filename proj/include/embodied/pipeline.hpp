#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "embodied/behavior_dim.hpp"
#include "embodied/crbm.hpp"
#include "embodied/json_io.hpp"
#include "embodied/worlds.hpp"

namespace embodied {

struct ExperimentConfig {
  CyclicWalkerConfig walker;
  std::size_t support_steps = 20000;   // exploration samples for |S| and gamma
  std::size_t train_steps = 1200;      // scripted demonstrations for training
  double keep_fraction = 0.8;
  double exploration_epsilon = 0.2;
  double gamma_tol = kEmpiricalRankTol;
  std::size_t m_min = 1;
  std::size_t m_max = 0;               // 0: twice the estimated bound
  std::size_t restarts = 20;
  std::size_t evals_per_model = 10;
  std::size_t eval_steps = 300;
  std::size_t gibbs_sweeps = 10;
  bool gibbs_eval = false;             // false: sample actions from the exact conditional
  double init_weight_sd = 0.01;
  double construct_sharpness = 100.0;
  TrainConfig train = desk_train_config();
  std::uint64_t seed = 0;

  static TrainConfig desk_train_config();
  /// The protocol sizes of the original study.
  static ExperimentConfig paper_scale();
  void check() const;
};

json to_json(const ExperimentConfig& cfg);
/// Missing fields keep their defaults.
ExperimentConfig experiment_config_from_json(const json& j);

/// Reads either an ExperimentConfig or a walker system written by gen-world
/// (whose sidecar carries the walker configuration).
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Sidecar path written next to a generated world file.
std::filesystem::path sidecar_path(const std::filesystem::path& world_file);

struct SupportStage {
  std::vector<std::uint64_t> histogram;
  SupportSet support;
  Trajectory exploration;
};

struct DimensionStage {
  EmpiricalKernel gamma;
  std::size_t d = 0;
  std::size_t m_bound = 0;
};

struct ScanRow {
  std::size_t m = 0;
  double best = 0.0;
  double mean = 0.0;
  double std = 0.0;
  std::size_t diverged = 0;
};

struct ScanReport {
  std::vector<ScanRow> rows;
  std::size_t support_size = 0;
  std::size_t d = 0;
  std::size_t m_bound = 0;
  double baseline = 0.0;
};

/// Encodes sensor and action indices for the CRBM policy.
struct PolicyCoding {
  std::size_t sensor_bits = 1;
  std::size_t action_bits = 1;
  std::size_t actions = 1;

  static PolicyCoding for_system(const SmlSystem& sys);
  /// Out-of-range output codes wrap around the action set.
  std::size_t action_of(std::uint64_t code) const { return static_cast<std::size_t>(code % actions); }
};

SupportStage run_support_stage(const WalkerSystem& world, const ExperimentConfig& cfg);
DimensionStage run_dimension_stage(const SupportStage& support, const ExperimentConfig& cfg);

/// Scripted (epsilon = 0) sensor/action pairs, drawn from their own stream.
std::vector<TrainingPair> collect_training_data(const WalkerSystem& world, const ExperimentConfig& cfg);

/// Distance covered by the scripted policy over eval_steps.
double scripted_baseline(const WalkerSystem& world, const ExperimentConfig& cfg);

/// Closed-loop distance of a CRBM policy over eval_steps.
double evaluate_crbm(const WalkerSystem& world, const CrbmParams& params, const ExperimentConfig& cfg,
                     std::uint64_t seed);

/// Hidden-unit construction of the scripted policy on the given support.
CrbmParams construct_scripted_crbm(const WalkerSystem& world, const SupportSet& support, double sharpness);

/// m-scan over [m_lo, m_hi]; (m, restart) cells run in parallel.
ScanReport run_scan_stage(const WalkerSystem& world, const ExperimentConfig& cfg,
                          const std::vector<TrainingPair>& data, std::size_t m_lo, std::size_t m_hi);
ScanReport run_scan_stage_serial(const WalkerSystem& world, const ExperimentConfig& cfg,
                                 const std::vector<TrainingPair>& data, std::size_t m_lo,
                                 std::size_t m_hi);

std::string scan_csv(const ScanReport& report);
json to_json(const ScanReport& report);

/// Full protocol: support, dimension, constructed CRBM, and the m-scan.
struct ExperimentResult {
  SupportStage support;
  DimensionStage dimension;
  double constructed_distance = 0.0;
  ScanReport scan;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::optional<std::pair<std::size_t, std::size_t>> m_range = {});
json experiment_report(const ExperimentConfig& cfg, const ExperimentResult& result);

}  // namespace embodied
