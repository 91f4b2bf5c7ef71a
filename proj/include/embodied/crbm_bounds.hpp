#pragma once

#include <cstdint>

namespace embodied {

/// Hidden units sufficient for embodied universal approximation on a support
/// of the given size and restricted dimension: |S| + d - 1.
std::uint64_t bound_embodied(std::uint64_t support_card, std::uint64_t d);

/// ceil(2^k (2^n - 1) / 2): sufficient for all conditionals of n outputs given k inputs.
std::uint64_t bound_nonembodied(unsigned k, unsigned n);
/// ceil(2^(k+n) / 2 - 1): sufficient via universal approximation of the joint.
std::uint64_t bound_joint(unsigned k, unsigned n);
/// ceil((2^k (2^n - 1) - n) / (n + k + 1)): necessary for all conditionals.
std::uint64_t bound_lower(unsigned k, unsigned n);

/// log2 of the unrounded non-embodied bound, usable where k + n > 62.
double log2_bound_nonembodied(unsigned k, unsigned n);

}  // namespace embodied
