#pragma once

#include <cstdint>
#include <string_view>

#include "so3sr/rotation.hpp"

namespace so3sr {

// Small self-contained xoshiro256++ engine.  Every consumer derives its own
// stream from one 64-bit root seed and a fixed label, so results do not
// depend on evaluation order elsewhere in the program.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  // Standard normal via Box-Muller.
  double normal();
  // Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n);

 private:
  std::uint64_t s_[4];
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Stable stream derivation: hash(label) mixed into the root seed.
Rng derive_stream(std::uint64_t root_seed, std::string_view label);
std::uint64_t derive_seed(std::uint64_t root_seed, std::string_view label);

// Haar-uniform rotation via a uniform unit quaternion (4 normals,
// normalized).  The rotation angle then has density (2/pi) sin^2(t/2).
Rotation haar_sample(Rng& rng);

// Rejection-samples M Haar points with pairwise distance >= min_sep.
// Throws std::runtime_error if max_tries draws cannot complete the set.
SupportSet well_separated_support(int M, double min_sep, Rng& rng,
                                  int max_tries = 100000);

}  // namespace so3sr
