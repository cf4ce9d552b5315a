#ifndef KDPP_RNG_HPP
#define KDPP_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace kdpp {

// All randomness flows through this wrapper so that a (seed, call sequence)
// pair fully determines every output. The raw std::mt19937_64 stream is
// standard-defined; the distributions below are hand-rolled because the
// std::*_distribution transforms are implementation-defined and would break
// byte-identical reruns across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Uniform integer in [0, n). Rejection over the top range keeps it unbiased.
  std::int64_t uniform_int(std::int64_t n) {
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    std::uint64_t v;
    do {
      v = gen_();
    } while (v >= limit);
    return static_cast<std::int64_t>(v % un);
  }

  // Standard normal via Box-Muller (cosine branch only).
  double normal() {
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  std::mt19937_64 gen_;
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

// Component seed streams are derived by hashing a label into the master
// seed, so adding a component never perturbs the streams of existing ones.
inline std::uint64_t derive_stream(std::uint64_t master_seed, std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (const char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return detail::splitmix64(master_seed ^ h);
}

}  // namespace kdpp

#endif
