#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace radpipe {

/// Deterministic splitmix64 generator. All randomness in the pipeline flows
/// through this so runs are reproducible independent of the standard library.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Unbiased integer in [0, n). n must be > 0.
  uint64_t below(uint64_t n) {
    // rejection sampling on the top of the range
    uint64_t limit = ~uint64_t{0} - (~uint64_t{0} % n);
    uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit && limit != 0);
    return v % n;
  }

  /// Uniform double in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return next_double() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  /// k distinct indices from [0, n), in random order.
  std::vector<size_t> sample_without_replacement(size_t n, size_t k) {
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    // partial Fisher-Yates: first k slots are the sample
    for (size_t i = 0; i < k && i < n; ++i) {
      size_t j = i + below(n - i);
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k < n ? k : n);
    return idx;
  }

 private:
  uint64_t state_;
};

/// FNV-1a accumulation, used to derive per-example seeds from run seed,
/// report id and chunk index.
inline uint64_t hash_mix(uint64_t h, std::string_view s) {
  if (h == 0) h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline uint64_t hash_mix(uint64_t h, uint64_t v) {
  if (h == 0) h = 14695981039346656037ULL;
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xFF;
    h *= 1099511628211ULL;
  }
  return h;
}

inline uint64_t example_seed(uint64_t run_seed, std::string_view report_id, uint64_t chunk_idx) {
  uint64_t h = hash_mix(0, run_seed);
  h = hash_mix(h, report_id);
  h = hash_mix(h, chunk_idx);
  return h;
}

}  // namespace radpipe
