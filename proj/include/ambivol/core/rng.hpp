#pragma once

#include <cstdint>
#include <random>

namespace ambivol {

// SplitMix64 finalizer; used to derive independent sub-seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Counter-based seed stream: the engine for stream `index` depends only on
// (master, index), so path k is the same whatever n_paths or thread count.
inline std::mt19937_64 stream_engine(std::uint64_t master, std::uint64_t index) {
  const std::uint64_t s = splitmix64(splitmix64(master) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace ambivol
