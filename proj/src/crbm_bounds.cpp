#include "embodied/crbm_bounds.hpp"

#include <cmath>

#include "embodied/error.hpp"

namespace embodied {

namespace {

void check_kn(unsigned k, unsigned n) {
  if (n < 1) throw ConfigError("bound: n must be >= 1");
  if (k + n > 62) throw CapacityError("bound: k + n > 62 overflows 64-bit arithmetic");
}

}  // namespace

std::uint64_t bound_embodied(std::uint64_t support_card, std::uint64_t d) {
  if (support_card < 1) throw ConfigError("bound: support cardinality must be >= 1");
  if (d > UINT64_MAX - support_card) throw CapacityError("bound: overflow");
  return support_card + d - 1;
}

std::uint64_t bound_nonembodied(unsigned k, unsigned n) {
  check_kn(k, n);
  // 2^k (2^n - 1) is even unless k = 0.
  const std::uint64_t v = (std::uint64_t{1} << k) * ((std::uint64_t{1} << n) - 1);
  return (v + 1) / 2;
}

std::uint64_t bound_joint(unsigned k, unsigned n) {
  check_kn(k, n);
  return (std::uint64_t{1} << (k + n)) / 2 - 1;
}

std::uint64_t bound_lower(unsigned k, unsigned n) {
  check_kn(k, n);
  const std::uint64_t v = (std::uint64_t{1} << k) * ((std::uint64_t{1} << n) - 1);
  if (v <= n) return 0;
  const std::uint64_t num = v - n, den = n + k + 1;
  return (num + den - 1) / den;
}

double log2_bound_nonembodied(unsigned k, unsigned n) {
  if (n < 1) throw ConfigError("bound: n must be >= 1");
  return static_cast<double>(k) - 1.0 + static_cast<double>(n) + std::log2(1.0 - std::ldexp(1.0, -static_cast<int>(n)));
}

}  // namespace embodied
