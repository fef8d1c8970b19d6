#pragma once

#include <cstdint>
#include <random>

namespace tgfnet {

// SplitMix64 finalizer. Used to derive independent stream seeds, e.g.
// mix(master_seed, scene_id).
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

// Seedable generator: std::mt19937_64 for raw bits (its output sequence is
// fixed by the C++ standard) with in-house transforms for every distribution,
// because the std distributions are implementation-defined.
//
//   uniform()      53 high bits / 2^53, in [0, 1)
//   uniform_int(n) rejection sampling on 64-bit words, in [0, n)
//   normal()       Marsaglia polar method, pairs cached
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t uniform_int(std::uint64_t n);
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace tgfnet
