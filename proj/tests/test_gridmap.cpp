#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "feclab/gridmap.hpp"

using namespace feclab;

TEST_CASE("grid side is the minimal multiple of 2^D") {
  CHECK(grid_spec_for(49, 2, 2).side == 8);
  CHECK(grid_spec_for(16, 0, 0).side == 4);
  CHECK(grid_spec_for(4, 2, 1).side == 4);
  CHECK(grid_spec_for(1, 0, 0).side == 1);

  // enumeration oracle: no smaller admissible side exists
  for (int L : {1, 3, 20, 49, 100, 257})
    for (int v : {0, 2, 6})
      for (int D : {0, 1, 2, 3}) {
        const GridSpec gs = grid_spec_for(L, v, D);
        const int unit = 1 << D;
        CHECK(gs.side % unit == 0);
        CHECK(gs.side * gs.side >= L + v);
        for (int smaller = gs.side - unit; smaller >= unit; smaller -= unit)
          CHECK(smaller * smaller < L + v);
      }
}

TEST_CASE("input grid holds the two streams row-major with zero padding") {
  const GridSpec gs = grid_spec_for(49, 2, 2);
  SymbolBlock rx(2 * gs.valid_steps());
  for (size_t i = 0; i < rx.size(); ++i) rx[i] = 0.1 * double(i) - 3.0;
  const InputGrid g = to_input_grid(rx, gs);
  REQUIRE(g.values.shape == Shape{1, 2, 8, 8});
  for (int t = 0; t < gs.valid_steps(); ++t) {
    CHECK(g.values.data[t] == rx[2 * t]);
    CHECK(g.values.data[64 + t] == rx[2 * t + 1]);
    CHECK(g.mask[t] == 1);
  }
  for (int t = gs.valid_steps(); t < 64; ++t) {
    CHECK(g.values.data[t] == 0.0);
    CHECK(g.values.data[64 + t] == 0.0);
    CHECK(g.mask[t] == 0);
  }

  // round trip: masked cells re-interleave to the original received block
  SymbolBlock back;
  for (int t = 0; t < gs.valid_steps(); ++t) {
    back.push_back(g.values.data[t]);
    back.push_back(g.values.data[64 + t]);
  }
  CHECK(back == rx);

  CHECK_THROWS_AS(to_input_grid(SymbolBlock(7, 0.0), gs), std::invalid_argument);
}

TEST_CASE("all-zero codeword maps to +1 on masked cells") {
  const GridSpec gs = grid_spec_for(10, 2, 1);
  const SymbolBlock rx(2 * gs.valid_steps(), 1.0);  // modulated zeros, sigma 0
  const InputGrid g = to_input_grid(rx, gs);
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < gs.cells(); ++i)
      CHECK(g.values.data[c * gs.cells() + i] == (g.mask[i] ? 1.0 : 0.0));
}

TEST_CASE("degenerate 1x1 grid") {
  const GridSpec gs = grid_spec_for(1, 0, 0);
  const InputGrid g = to_input_grid({0.25, -0.75}, gs);
  CHECK(g.values.shape == Shape{1, 2, 1, 1});
  CHECK(g.values.data[0] == 0.25);
  CHECK(g.values.data[1] == -0.75);
}

TEST_CASE("target grid and output extraction round trip") {
  const GridSpec gs = grid_spec_for(49, 2, 2);
  Bits msg(49);
  for (size_t i = 0; i < msg.size(); ++i) msg[i] = uint8_t(i % 2);
  const TargetGrid t = to_target_grid(msg, gs);
  REQUIRE(t.values.shape == Shape{1, 1, 8, 8});
  int ones = 0;
  for (uint8_t m : t.mask) ones += m;
  CHECK(ones == 49);

  const std::vector<double> p = from_output_grid(t.values, gs);
  REQUIRE(int(p.size()) == 49);
  for (int k = 0; k < 49; ++k) CHECK(p[k] == double(msg[k]));

  CHECK_THROWS_AS(to_target_grid(Bits(48, 0), gs), std::invalid_argument);
}

TEST_CASE("tail and padding cells are never read back") {
  const GridSpec gs = grid_spec_for(49, 2, 2);
  Tensor<double> probs(Shape{1, 1, 8, 8});
  for (int i = 0; i < 64; ++i) probs.data[i] = 0.5;
  // row-major cell (6,1) has index 49: first tail position, must be ignored
  probs.at(0, 0, 6, 1) = std::nan("");
  for (int i = 51; i < 64; ++i) probs.data[i] = std::nan("");
  const std::vector<double> p = from_output_grid(probs, gs);
  REQUIRE(int(p.size()) == 49);
  for (double v : p) {
    CHECK(std::isfinite(v));
    CHECK(v == 0.5);
  }

  Tensor<double> bad(Shape{1, 1, 4, 4});
  CHECK_THROWS_AS(from_output_grid(bad, gs), std::invalid_argument);
}
