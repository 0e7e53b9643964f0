#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace protojoint {

// Deterministic random stream. All distributions are implemented here so
// results are identical across standard libraries and platforms.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  // Named sub-stream derivation: every consumer of randomness derives its
  // own stream from the master seed, a domain label, and up to two indices.
  static Rng derive(uint64_t master, std::string_view domain, uint64_t a = 0,
                    uint64_t b = 0) {
    uint64_t h = mix(master ^ 0x9e3779b97f4a7c15ULL);
    for (char c : domain) h = mix(h ^ static_cast<uint64_t>(c));
    h = mix(h ^ a);
    h = mix(h ^ b);
    return Rng(h);
  }

  uint64_t next() { return gen_(); }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1].
  double uniform_open_closed() { return 1.0 - uniform(); }

  // Uniform on [lo, hi].
  double uniform_range(double lo, double hi) {
    return lo + (hi - lo) * uniform();
  }

  // Uniform integer on [lo, hi], inclusive, unbiased via rejection.
  int uniform_int(int lo, int hi) {
    uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return lo + static_cast<int>(x % span);
  }

  // Fisher-Yates shuffle using the unbiased integer draw above.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (int i = static_cast<int>(items.size()) - 1; i > 0; --i) {
      std::swap(items[static_cast<size_t>(i)],
                items[static_cast<size_t>(uniform_int(0, i))]);
    }
  }

 private:
  static uint64_t mix(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 gen_;
};

}  // namespace protojoint
