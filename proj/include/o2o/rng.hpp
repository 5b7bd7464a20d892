#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace o2o {

// Platform-stable random numbers. std::mt19937_64's output sequence is fixed
// by the standard; the distributions below are written out by hand because the
// <random> distributions are implementation-defined.

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Seed for the named stream `name` of root seed `seed`. Streams are
/// independent: drawing from one never shifts another.
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::string_view name) noexcept {
  return splitmix64(splitmix64(seed) ^ fnv1a(name));
}

namespace streams {
inline constexpr std::string_view kEnvGen = "env-gen";
inline constexpr std::string_view kRefGen = "ref-gen";
inline constexpr std::string_view kNoise = "noise";
inline constexpr std::string_view kRollout = "rollout";
inline constexpr std::string_view kPolicy = "policy";
}  // namespace streams

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, std::string_view stream) : engine_(stream_seed(seed, stream)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection sampling avoids modulo bias.
  std::size_t index(std::size_t n) {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return static_cast<std::size_t>(x % bound);
  }

  /// Flat Dirichlet(1, ..., 1) sample: the uniform distribution on the simplex.
  std::vector<double> simplex(std::size_t n) {
    std::vector<double> out(n);
    double total = 0.0;
    for (auto& x : out) {
      x = -std::log1p(-uniform());
      total += x;
    }
    for (auto& x : out) x /= total;
    return out;
  }

  /// Index drawn from a discrete distribution given as weights summing to ~1.
  template <class Weights>
  std::size_t categorical(const Weights& w) {
    const double u = uniform();
    double acc = 0.0;
    const auto n = static_cast<std::size_t>(w.size());
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (w[i] > 0.0) last_positive = i;
      acc += w[i];
      if (u < acc) return i;
    }
    return last_positive;
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace o2o
