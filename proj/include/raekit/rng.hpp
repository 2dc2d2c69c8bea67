#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace raekit {

// Deterministic random source. Draws are produced from raw mt19937_64 words
// rather than std distributions, whose output is implementation-defined;
// identical seeds give identical streams on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed), seed_(seed) {}

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; the paired value is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * M_PI * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  // Unbiased integer in [0, bound). bound must be > 0.
  std::uint64_t integer(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x = gen_();
    while (x >= limit) x = gen_();
    return x % bound;
  }

  // Fisher-Yates, deterministic per seed (std::shuffle is not portable).
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[integer(i)]);
    }
  }

  // Derive an independent stream from this rng's seed, e.g. one per
  // pipeline stage. Does not consume draws from this rng.
  Rng fork(std::uint64_t stream) const {
    return Rng(splitmix(seed_ ^ splitmix(stream + 0x9e3779b97f4a7c15ULL)));
  }

  std::uint64_t seed() const { return seed_; }

  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

 private:
  std::mt19937_64 gen_;
  std::uint64_t seed_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace raekit
