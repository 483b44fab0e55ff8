#pragma once

// Seeded pseudo-randomness for the whole library.
//
// Everything that draws random numbers goes through Rng so that a run is a
// pure function of its 64-bit seed. The generator is xoshiro256** with
// splitmix64 state expansion; independent streams are derived from the same
// seed by mixing in a stream tag, so consuming one stream never shifts
// another (sample order stays aligned between algorithm variants).

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace somf {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

class Rng {
 public:
  Rng() : Rng(0) {}

  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = detail::splitmix64(sm);
  }

  // Independent stream derived from (seed, tag). Deterministic regardless of
  // how much the parent has already been consumed.
  static Rng fork(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t sm = seed ^ (0x9e3779b97f4a7c15ULL * (tag + 1));
    return Rng(detail::splitmix64(sm));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = detail::rotl64(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = detail::rotl64(s_[3], 45);
    return result;
  }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double prob) { return uniform() < prob; }

  // Uniform integer in [0, n). Lemire's multiply-shift; n must be nonzero.
  std::uint64_t uniform_index(std::uint64_t n) {
    const auto wide =
        static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(n);
    return static_cast<std::uint64_t>(wide >> 64);
  }

  // Standard normal via Box-Muller. Draws two uniforms, returns one deviate;
  // no cached state, so serialization stays a four-word affair.
  double normal() {
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  std::array<std::uint64_t, 4> state() const { return s_; }

  static Rng from_state(const std::array<std::uint64_t, 4>& state) {
    Rng r;
    r.s_ = state;
    return r;
  }

 private:
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace somf
