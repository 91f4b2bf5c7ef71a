#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace embodied {

/// Mixes a base seed with a path of stream identifiers (splitmix64 finaliser).
/// Every (seed, path) pair names an independent random stream, which is how
/// concurrent simulations and scan cells stay reproducible.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    return Rng(derive_seed(seed, path));
  }

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1) built from the top 53 bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  double normal(double mean, double sd) {
    std::normal_distribution<double> dist(mean, sd);
    return dist(engine_);
  }

  /// Index drawn from an (unnormalised, non-negative) weight vector.
  std::size_t categorical(std::span<const double> weights);

  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace embodied
