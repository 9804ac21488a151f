#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>
#include <vector>

namespace tomo {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic sub-seed for a named consumer of a root seed. Distinct tags
// give independent streams, so adding draws to one consumer does not perturb
// the others.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return splitmix64(h ^ splitmix64(root));
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view tag,
                                 std::uint64_t index) {
  return splitmix64(derive_seed(root, tag) ^ (index + 0x9e3779b97f4a7c15ULL));
}

// mt19937_64 with hand-rolled sampling. The standard pins the engine output
// exactly but leaves <random> distributions implementation-defined, so all
// draws go through these helpers to keep runs reproducible across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Uniform in [0, n); unbiased via rejection. n must be >= 1.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % n;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
  }

  // Uniform over [0, n) \ {excluded}. n must be >= 2.
  std::uint64_t below_excluding(std::uint64_t n, std::uint64_t excluded) {
    const std::uint64_t x = below(n - 1);
    return x >= excluded ? x + 1 : x;
  }

  // k distinct values from [0, n), in draw order (partial Fisher-Yates).
  std::vector<std::uint32_t> sample_distinct(std::uint32_t n, std::uint32_t k) {
    std::vector<std::uint32_t> pool(n);
    for (std::uint32_t i = 0; i < n; ++i) pool[i] = i;
    std::vector<std::uint32_t> out;
    out.reserve(k);
    for (std::uint32_t i = 0; i < k; ++i) {
      const auto j = i + static_cast<std::uint32_t>(below(n - i));
      std::swap(pool[i], pool[j]);
      out.push_back(pool[i]);
    }
    return out;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace tomo
