#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

#include <boost/random/normal_distribution.hpp>

namespace qsmooth {

/// xoshiro256++ (Blackman and Vigna). Satisfies UniformRandomBitGenerator.
class Xoshiro256pp {
 public:
  using result_type = std::uint64_t;

  Xoshiro256pp() : Xoshiro256pp(0x9e3779b97f4a7c15ull, 0xbf58476d1ce4e5b9ull, 0x94d049bb133111ebull, 1) {}
  Xoshiro256pp(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) : s_{a, b, c, d} {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  friend bool operator==(const Xoshiro256pp&, const Xoshiro256pp&) = default;

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

using Engine = Xoshiro256pp;

/// Stream domains; part of every stream key so that different stages never
/// share random numbers.
enum class StreamKind : std::uint64_t {
  true_trajectory = 1,
  hypothetical = 2,
  correlator = 3,
  bootstrap = 4,
  future = 5,
};

/// Independent engine keyed by (master_seed, kind, indices...). The same key
/// always yields the same stream, whatever thread consumes it.
Engine make_stream(std::uint64_t master_seed, StreamKind kind, std::initializer_list<std::uint64_t> indices);

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Engine& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Standard normal by Boost's ziggurat, so streams do not depend on the
/// standard library vendor.
inline double standard_normal(Engine& rng) {
  static thread_local boost::random::normal_distribution<double> dist;
  return dist(rng);
}

}  // namespace qsmooth
