#pragma once

// Seeded random streams. Every replication of an experiment draws from its
// own engine derived from (master seed, stream index), so results do not
// depend on scheduling.

#include <cstdint>
#include <random>

namespace confband {

using Engine = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
  return splitmix64(splitmix64(master) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

inline Engine make_engine(std::uint64_t master, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(derive_seed(master, stream)),
                    static_cast<std::uint32_t>(derive_seed(master, stream) >> 32)};
  return Engine(seq);
}

inline double uniform01(Engine& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

}  // namespace confband
