#pragma once

#include <cstdint>
#include <random>

namespace occ {

using Rng = std::mt19937_64;

enum class StreamTag : std::uint32_t
{
  replica = 1,
  start = 2,
  clan = 3,
  gaussian = 4,
  test = 5,
};

// Independent stream for (master seed, index, purpose). Replica i gets
// the same stream no matter which worker runs it.
inline Rng make_stream(std::uint64_t master, std::uint64_t index, StreamTag tag = StreamTag::replica)
{
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(tag)};
  return Rng(seq);
}

inline double uniform01(Rng &rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

// strictly inside (0,1)
inline double uniform_open(Rng &rng)
{
  double u;
  do {
    u = uniform01(rng);
  } while (u <= 0.0);
  return u;
}

inline double std_normal(Rng &rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

inline double exponential(Rng &rng, double rate) { return -std::log(uniform_open(rng)) / rate; }

} // namespace occ
