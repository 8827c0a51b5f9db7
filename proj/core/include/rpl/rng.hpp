#ifndef RPL_RNG_HPP_
#define RPL_RNG_HPP_

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace rpl::rng {

// SplitMix64 finalizer. Used both as a hash mixer and to seed streams.
uint64_t splitmix64(uint64_t x);

// Order-dependent 64-bit mixing of two values.
uint64_t mix(uint64_t a, uint64_t b);

// FNV-1a over a byte string, for hashing config snapshots into run ids.
uint64_t hash_bytes(std::string_view bytes);

// Deterministic random stream. mt19937_64 is fully specified by the
// standard, so sequences are reproducible across platforms; the scalar
// helpers below avoid std::*_distribution, whose outputs are not.
class Stream {
 public:
  explicit Stream(uint64_t seed) : engine_(splitmix64(seed)) {}

  uint64_t next() { return engine_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). Lemire's multiply-shift with rejection.
  uint64_t below(uint64_t n);

  int range(int lo, int hi);  // inclusive bounds

  // Standard normal via Box-Muller; one deterministic draw per call.
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Derives an independent stream from a master seed and a purpose tag, so
// that concurrent runs and phases never share draws.
Stream derive_stream(uint64_t master_seed, std::string_view tag, uint64_t index = 0);

}  // namespace rpl::rng

#endif  // RPL_RNG_HPP_
