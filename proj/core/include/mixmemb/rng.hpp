#pragma once

#include <cstdint>
#include <random>

namespace mixmemb {

using Rng = std::mt19937_64;

// SplitMix64 finalizer. Bijective, avalanche-complete 64-bit mixer.
std::uint64_t mix64(std::uint64_t x);

// Seed for the independent child stream of (grid point, replicate) under a
// master seed. Depends only on the three values, not on evaluation order.
std::uint64_t child_seed(std::uint64_t master, std::uint64_t point,
                         std::uint64_t replicate);

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace mixmemb
