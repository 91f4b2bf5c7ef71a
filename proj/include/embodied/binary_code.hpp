#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace embodied {

/// Bit vector, most significant bit first.
using Bits = std::vector<std::uint8_t>;

Bits index_to_bits(std::uint64_t index, std::size_t nbits);
std::uint64_t bits_to_index(std::span<const std::uint8_t> bits);

/// Smallest bit count able to index `count` states (at least 1).
std::size_t bits_for(std::size_t count);

/// Equidistant binning of [-1, 1] per channel.
struct BinaryCode {
  std::size_t bits_per_channel = 4;
  std::size_t channels = 1;

  std::size_t total_bits() const { return bits_per_channel * channels; }
  std::size_t bins() const { return std::size_t{1} << bits_per_channel; }
};

/// Bin index of a value already inside [-1, 1].
std::size_t bin_of(double value, std::size_t bits);
double bin_center(std::size_t bin, std::size_t bits);

/// Encoder that clamps out-of-range values and counts how often it had to.
class BinaryEncoder {
 public:
  explicit BinaryEncoder(BinaryCode code);

  const BinaryCode& code() const { return code_; }
  Bits encode(std::span<const double> values);
  std::vector<double> decode(std::span<const std::uint8_t> bits) const;
  std::size_t clamped() const { return clamped_; }

 private:
  BinaryCode code_;
  std::size_t clamped_ = 0;
};

}  // namespace embodied
