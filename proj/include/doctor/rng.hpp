#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace doctor {

// Stateless 64-bit mixer used to derive independent sub-seeds.
std::uint64_t splitmix64(std::uint64_t x);

// Deterministic seed derivation from a base seed plus a tag and optional index.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index = 0);

// Deterministic random source. The generator is splitmix64 and every sampler
// is implemented explicitly, so streams are reproducible across platforms and
// builds (the standard library distributions are not specified bit-exactly).
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  double uniform();                    // [0, 1)
  double uniform(double lo, double hi);
  int uniform_int(int n);              // [0, n)
  double normal();                     // standard normal, Box-Muller
  double gamma(double alpha);          // shape alpha, unit scale
  double beta(double a, double b);

  void shuffle(std::vector<int>& v);   // Fisher-Yates

 private:
  std::uint64_t state_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace doctor
