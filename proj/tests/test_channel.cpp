#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "feclab/channel.hpp"

using namespace feclab;

TEST_CASE("modulate maps 0 to +1 and 1 to -1") {
  CHECK(modulate({0, 1, 0}) == SymbolBlock{1.0, -1.0, 1.0});
  CHECK(modulate({}) == SymbolBlock{});
  // interleaved pairs 11,10,11
  CHECK(modulate({1, 1, 1, 0, 1, 1}) == SymbolBlock{-1, -1, -1, 1, -1, -1});
  CHECK_THROWS_AS(modulate({0, 2}), std::invalid_argument);
}

TEST_CASE("noise sigma pins the Eb/N0 convention") {
  CHECK(noise_sigma(0.0, 0.5) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(noise_sigma(4.0, 0.5) == doctest::Approx(0.6309573445).epsilon(1e-9));
  CHECK(noise_sigma(0.0, 1.0) == doctest::Approx(0.7071067812).epsilon(1e-9));
  CHECK_THROWS_AS(noise_sigma(0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(noise_sigma(0.0, -1.0), std::invalid_argument);
}

TEST_CASE("awgn is deterministic per stream and exact at sigma 0") {
  const SymbolBlock block{1.0, -1.0, 1.0, 1.0};
  Rng a = Rng::derive(123, {9});
  Rng b = Rng::derive(123, {9});
  CHECK(add_awgn(block, 0.7, a) == add_awgn(block, 0.7, b));

  Rng c(5);
  CHECK(add_awgn(block, 0.0, c) == block);
  Rng d(5);
  CHECK_THROWS_AS(add_awgn(block, -0.1, d), std::invalid_argument);
}

TEST_CASE("awgn empirical variance matches sigma^2") {
  const int n = 1000000;
  Rng rng(2024);
  const SymbolBlock zeros(n, 0.0);
  const SymbolBlock noisy = add_awgn(zeros, 0.5, rng);
  double mean = 0.0;
  for (double v : noisy) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : noisy) var += (v - mean) * (v - mean);
  var /= n;
  CHECK(std::fabs(var - 0.25) < 0.01 * 0.25);
  CHECK(std::fabs(mean) < 0.002);
}

TEST_CASE("uncoded BPSK matches the Q-function at 0 dB") {
  // Q(sqrt(2)) = 0.5 erfc(1)
  const double expect = 0.5 * std::erfc(1.0);
  CHECK(expect == doctest::Approx(0.07865).epsilon(1e-3));

  const int n = 1000000;
  Rng rng(77);
  Bits bits(n);
  for (auto& b : bits) b = uint8_t(rng.next_bit());
  const SymbolBlock rx = add_awgn(modulate(bits), noise_sigma(0.0, 1.0), rng);
  const Bits hard = hard_decide(rx);
  int64_t errs = 0;
  for (int i = 0; i < n; ++i) errs += hard[i] != bits[i];
  const double ber = double(errs) / n;
  CHECK(std::fabs(ber - expect) / expect < 0.03);
}

TEST_CASE("hard decision at sigma 0 inverts modulate; 0.0 decodes to bit 0") {
  const Bits bits{0, 1, 1, 0, 1};
  CHECK(hard_decide(modulate(bits)) == bits);
  CHECK(hard_decide({0.0}) == Bits{0});
}
