#pragma once

#include <cstdint>
#include <random>

namespace tla {

using Rng = std::mt19937_64;

// Mixes a master seed with a stream index into an independent seed.
// Used wherever work is split (per class, per trial, per epoch) so results
// do not depend on evaluation order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

inline Rng make_rng(std::uint64_t master, std::uint64_t stream) {
  return Rng(derive_seed(master, stream));
}

// Uniform in [0, 1) from the top 53 bits.
inline double unit_uniform(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace tla
