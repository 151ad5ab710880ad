#ifndef FOIL_RNG_HPP
#define FOIL_RNG_HPP

#include <cstdint>
#include <random>

namespace foil {

// Deterministic random source. Distributions are implemented here rather
// than via <random> adaptors: std::uniform_*_distribution output is
// implementation-defined, and seeds must reproduce byte-identical corpora
// and parameter files across standard libraries.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    // Rejection sampling over the top multiple of n.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  /// Uniform real in [0, 1) with 53-bit resolution.
  double real01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform real in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * real01(); }

  bool coin(double p_true = 0.5) { return real01() < p_true; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  /// Derive an independent stream, e.g. one per parallel job.
  Rng fork(std::uint64_t salt) {
    return Rng(engine_() ^ (salt * 0x9e3779b97f4a7c15ull));
  }

private:
  std::mt19937_64 engine_;
};

}  // namespace foil

#endif
