#include "so3sr/sampling.hpp"

#include <cmath>
#include <stdexcept>

namespace so3sr {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t sm = seed;
  for (auto& s : s_) s = splitmix64(sm);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * M_PI * u2);
  have_spare_ = true;
  return r * std::cos(2.0 * M_PI * u2);
}

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: n must be > 0");
  // Rejection to avoid modulo bias.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % n;
}

std::uint64_t derive_seed(std::uint64_t root_seed, std::string_view label) {
  std::uint64_t sm = root_seed ^ fnv1a(label);
  return splitmix64(sm);
}

Rng derive_stream(std::uint64_t root_seed, std::string_view label) {
  return Rng(derive_seed(root_seed, label));
}

Rotation haar_sample(Rng& rng) {
  double q[4];
  double n2 = 0.0;
  do {
    n2 = 0.0;
    for (double& c : q) {
      c = rng.normal();
      n2 += c * c;
    }
  } while (n2 < 1e-12);
  const double inv = 1.0 / std::sqrt(n2);
  const double w = q[0] * inv, x = q[1] * inv, y = q[2] * inv, z = q[3] * inv;
  Eigen::Matrix3d a;
  a << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return Rotation(a);
}

SupportSet well_separated_support(int M, double min_sep, Rng& rng,
                                  int max_tries) {
  if (M < 1)
    throw std::invalid_argument("well_separated_support: M must be >= 1");
  std::vector<Rotation> pts;
  pts.reserve(M);
  for (int tries = 0; static_cast<int>(pts.size()) < M; ++tries) {
    if (tries >= max_tries)
      throw std::runtime_error(
          "well_separated_support: separation not reachable within max_tries");
    Rotation cand = haar_sample(rng);
    bool ok = true;
    for (const Rotation& p : pts)
      if (geodesic_distance(cand, p) < min_sep) {
        ok = false;
        break;
      }
    if (ok) pts.push_back(cand);
  }
  return SupportSet(std::move(pts));
}

}  // namespace so3sr
