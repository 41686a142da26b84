#pragma once

// Seeded randomness shared by the generator and the federation simulator.
// Boost distributions are used instead of <random> ones because their output
// is identical on every standard library.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace fedconf::detail {

using Engine = boost::random::mt19937_64;

/// Engine keyed by a list of 64-bit words (master seed, stream tag, index...).
inline Engine make_engine(std::initializer_list<std::uint64_t> key) {
  std::vector<std::uint32_t> words;
  words.reserve(key.size() * 2);
  for (const std::uint64_t k : key) {
    words.push_back(static_cast<std::uint32_t>(k));
    words.push_back(static_cast<std::uint32_t>(k >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return Engine(seq);
}

/// Derives a child seed from a key, for handing to another seeded routine.
inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> key) {
  Engine engine = make_engine(key);
  return engine();
}

inline std::size_t uniform_index(Engine& engine, std::size_t n) {
  boost::random::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine);
}

/// Fisher-Yates over [first, first + n).
template <typename It>
void shuffle(It first, std::size_t n, Engine& engine) {
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = uniform_index(engine, i);
    std::swap(first[i - 1], first[j]);
  }
}

// Stream tags keep seeds used for different purposes independent.
inline constexpr std::uint64_t kPartitionStream = 0x70617274;  // "part"
inline constexpr std::uint64_t kNoiseStream = 0x6e6f6973;      // "nois"
inline constexpr std::uint64_t kRowStream = 0x726f7773;        // "rows"
inline constexpr std::uint64_t kTrialStream = 0x7472696c;      // "tril"

}  // namespace fedconf::detail
