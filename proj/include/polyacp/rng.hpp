#pragma once

#include <cstdint>
#include <random>

namespace polyacp {

using Rng = std::mt19937_64;

// Independent random streams derived from the single user-visible seed.
enum class Stream : std::uint32_t {
  init = 1,
  batch = 2,
  monitor = 3,
  synthetic = 4,
};

// Builds an engine for (seed, stream, t). Mini-batches are a pure function
// of (seed, t).
inline Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t t = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(t),
                    static_cast<std::uint32_t>(t >> 32)};
  return Rng(seq);
}

}  // namespace polyacp
