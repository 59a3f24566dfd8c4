#pragma once

#include <array>
#include <cstdint>

namespace ppck::rng {

// Philox4x32-10 counter-based generator (Salmon et al., 2011). Every random
// value is addressed by (stream key, counter index), so draws are identical
// no matter which thread computes them or in which order.
std::array<uint32_t, 4> philox4x32(const std::array<uint32_t, 2>& key,
                                   const std::array<uint32_t, 4>& ctr);

uint64_t splitmix64(uint64_t x);

// Standard normal quantile. Hastings-type seed refined with Newton steps on
// the erfc-based CDF; accurate to full double precision on (0,1).
double normal_quantile(double p);

// An addressable substream identified by (seed, domain, a, b).
class Stream {
 public:
  Stream(uint64_t seed, uint32_t domain, uint64_t a, uint64_t b);

  // i-th uniform of the stream, strictly inside (0,1).
  double uniform(uint64_t i) const;
  // i-th standard normal of the stream.
  double normal(uint64_t i) const;
  // chi-square with integer df, consuming indices [i, i+df).
  double chisq(uint64_t i, int df) const;

 private:
  std::array<uint32_t, 2> key_;
};

}  // namespace ppck::rng
