#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "embodied/binary_code.hpp"
#include "embodied/json_io.hpp"
#include "embodied/linalg.hpp"
#include "embodied/rng.hpp"

namespace embodied {

/// Conditional RBM with k input units y, n output units x and m hidden units z:
/// p(x | y) proportional to sum_z exp(z.V y + z.W x + b.x + c.z).
struct CrbmParams {
  std::size_t k = 0;
  std::size_t n = 0;
  std::size_t m = 0;
  Matrix V;  // m x k
  Matrix W;  // m x n
  Vector b;  // n
  Vector c;  // m

  static CrbmParams zeros(std::size_t k, std::size_t n, std::size_t m);
  /// Gaussian weights with standard deviation sd, zero biases.
  static CrbmParams random(std::size_t k, std::size_t n, std::size_t m, double sd, Rng& rng);

  std::size_t parameter_count() const { return m * k + m * n + m + n; }
  bool finite() const;
  /// Throws ConfigError if the blocks do not match (k, n, m).
  void check() const;
};

json to_json(const CrbmParams& p);
CrbmParams crbm_from_json(const json& j);

/// Largest output width exact_conditional will enumerate.
inline constexpr std::size_t kMaxExactOutputs = 20;

/// p(x | y) for every x in {0,1}^n, indexed by bits_to_index(x). Outputs are
/// evaluated in parallel.
std::vector<double> exact_conditional(const CrbmParams& p, std::span<const std::uint8_t> y);
std::vector<double> exact_conditional_serial(const CrbmParams& p, std::span<const std::uint8_t> y);

/// Block Gibbs chain with y clamped, started from a uniform random x.
Bits gibbs_sample(const CrbmParams& p, std::span<const std::uint8_t> y, std::size_t sweeps, Rng& rng);
Bits gibbs_sample(const CrbmParams& p, std::span<const std::uint8_t> y, std::size_t sweeps,
                  std::uint64_t seed);

struct TrainConfig {
  std::size_t epochs = 20000;
  std::size_t batch_size = 50;
  double learning_rate = 1.0;
  double momentum = 0.1;
  double weight_cost = 0.001;
  std::size_t cd_steps = 10;
  double input_noise_sd = 0.01;
  std::uint64_t seed = 0;

  void check() const;
};

json to_json(const TrainConfig& cfg);
/// Missing fields keep their defaults.
TrainConfig train_config_from_json(const json& j);

struct TrainingPair {
  Bits y;
  Bits x;
};

/// Conditional CD-k: the negative chain alternates x and z with y clamped.
CrbmParams cd_train(CrbmParams params, std::span<const TrainingPair> data, const TrainConfig& cfg);

/// Sample whose input is real-valued; Gaussian noise is added and the result
/// binned every time the sample is used.
struct ContinuousPair {
  std::vector<double> y;
  Bits x;
};

CrbmParams cd_train_continuous(CrbmParams params, std::span<const ContinuousPair> data,
                               const BinaryCode& input_code, const TrainConfig& cfg);

/// Mean log p(x | y) over the data, evaluated exactly.
double conditional_log_likelihood(const CrbmParams& p, std::span<const TrainingPair> data);

struct SupportPoint {
  Bits y;
  Bits x;
  double prob = 0.0;  // p(x | y)
};

/// CRBM with |support| - 1 hidden units whose conditional approaches the
/// target as the sharpness grows.
CrbmParams construct_sparse_crbm(std::span<const SupportPoint> support, double sharpness);

/// Sum over the represented inputs y of KL(target(. | y) || model(. | y)).
double conditional_kl(const CrbmParams& p, std::span<const SupportPoint> support);

}  // namespace embodied
