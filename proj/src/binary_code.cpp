#include "embodied/binary_code.hpp"

#include <algorithm>
#include <cmath>

#include "embodied/error.hpp"

namespace embodied {

Bits index_to_bits(std::uint64_t index, std::size_t nbits) {
  if (nbits > 63) throw CapacityError("index_to_bits: too many bits");
  if (nbits < 64 && index >> nbits != 0) throw ConfigError("index_to_bits: index does not fit");
  Bits out(nbits);
  for (std::size_t i = 0; i < nbits; ++i) out[i] = static_cast<std::uint8_t>(index >> (nbits - 1 - i) & 1U);
  return out;
}

std::uint64_t bits_to_index(std::span<const std::uint8_t> bits) {
  if (bits.size() > 63) throw CapacityError("bits_to_index: too many bits");
  std::uint64_t v = 0;
  for (auto b : bits) v = v << 1 | (b ? 1U : 0U);
  return v;
}

std::size_t bits_for(std::size_t count) {
  std::size_t bits = 1;
  while ((std::size_t{1} << bits) < count) ++bits;
  return bits;
}

std::size_t bin_of(double value, std::size_t bits) {
  const double nb = std::ldexp(1.0, static_cast<int>(bits));
  const double raw = std::floor((value + 1.0) / 2.0 * nb);
  return static_cast<std::size_t>(std::clamp(raw, 0.0, nb - 1.0));
}

double bin_center(std::size_t bin, std::size_t bits) {
  const double nb = std::ldexp(1.0, static_cast<int>(bits));
  return -1.0 + (static_cast<double>(bin) + 0.5) * 2.0 / nb;
}

BinaryEncoder::BinaryEncoder(BinaryCode code) : code_(code) {
  if (code_.bits_per_channel == 0 || code_.bits_per_channel > 30 || code_.channels == 0) {
    throw ConfigError("BinaryCode: bits_per_channel must be in 1..30 and channels >= 1");
  }
}

Bits BinaryEncoder::encode(std::span<const double> values) {
  if (values.size() != code_.channels) throw ConfigError("encode: wrong number of channels");
  Bits out;
  out.reserve(code_.total_bits());
  for (double v : values) {
    if (std::isnan(v)) throw ValidationError("encode: NaN value");
    if (v < -1.0 || v > 1.0) {
      ++clamped_;
      v = std::clamp(v, -1.0, 1.0);
    }
    const Bits b = index_to_bits(bin_of(v, code_.bits_per_channel), code_.bits_per_channel);
    out.insert(out.end(), b.begin(), b.end());
  }
  return out;
}

std::vector<double> BinaryEncoder::decode(std::span<const std::uint8_t> bits) const {
  if (bits.size() != code_.total_bits()) throw ConfigError("decode: wrong number of bits");
  std::vector<double> out;
  for (std::size_t c = 0; c < code_.channels; ++c) {
    const auto chunk = bits.subspan(c * code_.bits_per_channel, code_.bits_per_channel);
    out.push_back(bin_center(bits_to_index(chunk), code_.bits_per_channel));
  }
  return out;
}

}  // namespace embodied
