#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace factflow {

// Seedable generator whose output is identical on every platform.
//
// The engine is std::mt19937_64, whose sequence the standard fixes exactly.
// Distributions are implemented here rather than taken from <random>, since
// the standard distributions are implementation-defined.
//
// Streams: Rng(seed, "column:Sale") derives an independent stream by mixing
// the FNV-1a hash of the stream name into the seed with splitmix64, so adding
// a column never perturbs the draws of another column.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  Rng(std::uint64_t seed, std::string_view stream);

  std::uint64_t next_u64() { return engine_(); }

  // Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);
  // Uniform integer in [lo, hi], inclusive, over the full int64 range.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  // Uniform real in [0, 1) with 53 random bits.
  double uniform01();
  double uniform_real(double lo, double hi);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view text);

}  // namespace factflow
