#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace fedppi {

/// Seedable generator with a fully specified output stream:
///   engine   std::mt19937_64 seeded with the 64-bit seed
///   uniform  (engine() >> 11) * 2^-53, in [0, 1)
///   normal   Marsaglia polar method, second variate cached
///   below(n) rejection sampling on the largest multiple of n
/// std distributions are avoided because their output differs between
/// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  bool bernoulli(double p) { return uniform() < p; }
  /// Uniform integer in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);

  /// Fisher-Yates, walking from the back.
  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace fedppi
