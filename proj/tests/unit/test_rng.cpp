#include <doctest.h>

#include <cmath>
#include <vector>

#include "ppck/rng.hpp"

using namespace ppck;

TEST_SUITE("rng") {

TEST_CASE("philox known-answer vectors") {
  // Reference vectors from the Random123 distribution (kat_vectors).
  auto out = rng::philox4x32({0u, 0u}, {0u, 0u, 0u, 0u});
  CHECK(out[0] == 0x6627e8d5u);
  CHECK(out[1] == 0xe169c58du);
  CHECK(out[2] == 0xbc57ac4cu);
  CHECK(out[3] == 0x9b00dbd8u);

  out = rng::philox4x32({0xffffffffu, 0xffffffffu},
                        {0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu});
  CHECK(out[0] == 0x408f276du);
  CHECK(out[1] == 0x41c83b0eu);
  CHECK(out[2] == 0xa20bc7c6u);
  CHECK(out[3] == 0x6d5451fdu);

  out = rng::philox4x32({0xa4093822u, 0x299f31d0u},
                        {0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u});
  CHECK(out[0] == 0xd16cfe09u);
  CHECK(out[1] == 0x94fdccebu);
  CHECK(out[2] == 0x5001e420u);
  CHECK(out[3] == 0x24126ea1u);
}

TEST_CASE("normal quantile against the erfc-based cdf") {
  CHECK(std::abs(rng::normal_quantile(0.5)) < 1e-13);
  CHECK(rng::normal_quantile(0.975) == doctest::Approx(1.959963984540054));
  CHECK(rng::normal_quantile(0.025) == doctest::Approx(-1.959963984540054));
  for (int i = 1; i < 200; ++i) {
    const double p = i / 200.0;
    const double x = rng::normal_quantile(p);
    const double cdf = 0.5 * std::erfc(-x / std::sqrt(2.0));
    CHECK(cdf == doctest::Approx(p).epsilon(1e-12));
  }
  // tails
  for (double p : {1e-6, 1e-9, 1.0 - 1e-6}) {
    const double x = rng::normal_quantile(p);
    const double cdf = 0.5 * std::erfc(-x / std::sqrt(2.0));
    CHECK(cdf == doctest::Approx(p).epsilon(1e-9));
  }
}

TEST_CASE("streams are addressable and reproducible") {
  const rng::Stream a(42, 1, 3, 7);
  const rng::Stream b(42, 1, 3, 7);
  const rng::Stream c(42, 1, 3, 8);
  CHECK(a.uniform(0) == b.uniform(0));
  CHECK(a.uniform(123456789ull) == b.uniform(123456789ull));
  CHECK(a.uniform(0) != c.uniform(0));
  for (uint64_t i = 0; i < 1000; ++i) {
    const double u = a.uniform(i);
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("stream moments are sane") {
  const rng::Stream st(7, 1, 0, 0);
  const int n = 20000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = st.normal(i);
    sum += z;
    sumsq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.05);
  CHECK(sumsq / n == doctest::Approx(1.0).epsilon(0.05));

  const int df = 5;
  double csum = 0.0;
  for (int i = 0; i < 4000; ++i) csum += st.chisq(100000 + i * df, df);
  CHECK(csum / 4000 == doctest::Approx(df).epsilon(0.05));
}

}  // TEST_SUITE
