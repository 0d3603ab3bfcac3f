#pragma once

#include <cstdint>
#include <random>

namespace spdsim {

// splitmix64, used only to turn one master seed into decorrelated substream
// seeds. The substreams themselves are mt19937_64.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// One generator per random purpose. Keeping the streams separate means a
// draw in one part of the model cannot shift every sample that follows it.
enum class Stream : std::uint64_t {
  Source = 1,
  Dark = 2,
  Thinning = 3,
  Traps = 4,
  Response = 5,
  SystemJitter = 6,
};

inline std::mt19937_64 make_stream(std::uint64_t seed, Stream stream) {
  std::uint64_t state = seed;
  splitmix64(state);
  state ^= static_cast<std::uint64_t>(stream) * 0xd1b54a32d192ed03ULL;
  std::uint64_t derived = splitmix64(state);
  return std::mt19937_64(derived);
}

inline double uniform01(std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double normal(std::mt19937_64& rng, double mean, double sigma) {
  if (sigma <= 0.0) return mean;
  return std::normal_distribution<double>(mean, sigma)(rng);
}

// mean is the distribution mean (1/lambda).
inline double exponential(std::mt19937_64& rng, double mean) {
  return std::exponential_distribution<double>(1.0 / mean)(rng);
}

inline std::uint64_t poisson(std::mt19937_64& rng, double mean) {
  if (mean <= 0.0) return 0;
  return std::poisson_distribution<std::uint64_t>(mean)(rng);
}

}  // namespace spdsim
