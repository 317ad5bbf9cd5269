#pragma once

#include <cstdint>
#include <random>

namespace invbo {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent child streams from a
// parent seed so that fan-out work stays deterministic.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) { return Rng(mix_seed(seed, stream)); }

double uniform01(Rng& rng);
double standard_normal(Rng& rng);

}  // namespace invbo
