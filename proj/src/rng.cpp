#include "ppck/rng.hpp"

#include <cmath>

namespace ppck::rng {

namespace {

constexpr uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void philox_round(std::array<uint32_t, 4>& ctr,
                         const std::array<uint32_t, 2>& key) {
  const uint64_t p0 = static_cast<uint64_t>(kPhiloxM0) * ctr[0];
  const uint64_t p1 = static_cast<uint64_t>(kPhiloxM1) * ctr[2];
  const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32);
  const uint32_t lo0 = static_cast<uint32_t>(p0);
  const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32);
  const uint32_t lo1 = static_cast<uint32_t>(p1);
  ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

}  // namespace

std::array<uint32_t, 4> philox4x32(const std::array<uint32_t, 2>& key,
                                   const std::array<uint32_t, 4>& ctr) {
  std::array<uint32_t, 4> x = ctr;
  std::array<uint32_t, 2> k = key;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k[0] += kPhiloxW0;
      k[1] += kPhiloxW1;
    }
    philox_round(x, k);
  }
  return x;
}

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double normal_quantile(double p) {
  // Seed with the classic rational tail approximation, then polish with
  // Newton on Phi(x) - p. Phi via erfc is exact to double precision, and
  // four fixed steps keep evaluation order deterministic.
  const bool lower = p < 0.5;
  const double ps = lower ? p : 1.0 - p;
  const double t = std::sqrt(-2.0 * std::log(ps));
  double x = t - (2.30753 + 0.27061 * t) / (1.0 + t * (0.99229 + 0.04481 * t));
  if (lower) x = -x;
  constexpr double inv_sqrt2 = 0.7071067811865475244;
  constexpr double inv_sqrt2pi = 0.3989422804014326779;
  for (int it = 0; it < 4; ++it) {
    const double cdf = 0.5 * std::erfc(-x * inv_sqrt2);
    const double pdf = inv_sqrt2pi * std::exp(-0.5 * x * x);
    x -= (cdf - p) / pdf;
  }
  return x;
}

Stream::Stream(uint64_t seed, uint32_t domain, uint64_t a, uint64_t b) {
  uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ (static_cast<uint64_t>(domain) << 32));
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  key_ = {static_cast<uint32_t>(h), static_cast<uint32_t>(h >> 32)};
}

double Stream::uniform(uint64_t i) const {
  const std::array<uint32_t, 4> ctr = {static_cast<uint32_t>(i),
                                       static_cast<uint32_t>(i >> 32), 0u, 0u};
  const auto out = philox4x32(key_, ctr);
  const uint64_t bits =
      (static_cast<uint64_t>(out[0]) << 32) | static_cast<uint64_t>(out[1]);
  // 52 random bits centered in each cell keeps the value strictly in (0,1).
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

double Stream::normal(uint64_t i) const { return normal_quantile(uniform(i)); }

double Stream::chisq(uint64_t i, int df) const {
  double s = 0.0;
  for (int k = 0; k < df; ++k) {
    const double z = normal(i + static_cast<uint64_t>(k));
    s += z * z;
  }
  return s;
}

}  // namespace ppck::rng
