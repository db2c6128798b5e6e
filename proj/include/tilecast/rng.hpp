#pragma once

// Deterministic counter-based RNG. Streams are derived by hashing
// (seed, stream ids...) with splitmix64, so any (realization, user, purpose)
// tuple owns an independent stream regardless of evaluation order or
// parallelism. Draws avoid std::uniform_*_distribution on purpose: those are
// implementation-defined, and results here must be bit-stable.

#include <cstdint>
#include <vector>

namespace tilecast {

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {
    // Burn a few outputs so small seeds decorrelate.
    for (int i = 0; i < 4; ++i) splitmix64(state_);
  }

  // Independent stream for a tagged purpose: hash-combines all ids.
  static Rng stream(uint64_t seed, std::initializer_list<uint64_t> ids) {
    uint64_t s = seed;
    for (uint64_t id : ids) {
      s ^= splitmix64(s) + 0x9e3779b97f4a7c15ULL + (id << 1) + (id >> 3);
      s += id * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL;
    }
    return Rng(s);
  }

  uint64_t next_u64() { return splitmix64(state_); }

  // Uniform in [0,1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [lo,hi], inclusive, by rejection (unbiased).
  int uniform_int(int lo, int hi) {
    const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    const uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return lo + static_cast<int>(v % span);
  }

  // Index into `probs` by CDF inversion. Probabilities must sum to ~1; the
  // final bucket absorbs rounding.
  int discrete(const std::vector<double>& probs) {
    double u = uniform();
    double acc = 0.0;
    for (size_t i = 0; i + 1 < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
  }

 private:
  uint64_t state_;
};

// Stream purpose tags for scenario sampling; part of the reproducibility
// contract (changing these renumbers every sampled realization).
enum class StreamTag : uint64_t {
  viewing_direction = 1,
  quality = 2,
  dc_restart = 3,
};

}  // namespace tilecast
