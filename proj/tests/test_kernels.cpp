#include <doctest.h>

#include <stdexcept>

#include "feclab/kernels.hpp"
#include "testutil.hpp"

using namespace feclab;
using testutil::random_tensor;

// The OpenMP kernels must be bit-identical to the serial reference: they
// parallelize over independent output elements and keep the per-element
// accumulation order.

TEST_CASE("conv2d: par == ref bitwise") {
  Rng rng(101);
  for (int trial = 0; trial < 6; ++trial) {
    const int N = 1 + int(rng.next_u64() % 3);
    const int Ci = 1 + int(rng.next_u64() % 5);
    const int Co = 1 + int(rng.next_u64() % 5);
    const int H = 2 + int(rng.next_u64() % 15);
    const int W = 2 + int(rng.next_u64() % 15);
    const int K = (trial % 2) ? 1 : 3;
    const auto x = random_tensor(Shape{N, Ci, H, W}, rng);
    const auto w = random_tensor(Shape{Co, Ci, K, K}, rng);
    const auto b = random_tensor(Shape{1, Co, 1, 1}, rng);

    Tensor<double> y1(Shape{N, Co, H, W}), y2(Shape{N, Co, H, W});
    kern::ref::conv2d_fwd(x, w, b, y1);
    kern::par::conv2d_fwd(x, w, b, y2);
    REQUIRE(y1.data == y2.data);

    const auto gy = random_tensor(y1.shape, rng);
    Tensor<double> gx1(x.shape), gx2(x.shape), gw1(w.shape), gw2(w.shape), gb1(b.shape),
        gb2(b.shape);
    kern::ref::conv2d_bwd_input(gy, w, gx1);
    kern::par::conv2d_bwd_input(gy, w, gx2);
    REQUIRE(gx1.data == gx2.data);
    kern::ref::conv2d_bwd_params(x, gy, gw1, gb1);
    kern::par::conv2d_bwd_params(x, gy, gw2, gb2);
    REQUIRE(gw1.data == gw2.data);
    REQUIRE(gb1.data == gb2.data);
  }
}

TEST_CASE("upconv2: par == ref bitwise") {
  Rng rng(202);
  for (int trial = 0; trial < 6; ++trial) {
    const int N = 1 + int(rng.next_u64() % 3);
    const int Ci = 1 + int(rng.next_u64() % 6);
    const int Co = 1 + int(rng.next_u64() % 6);
    const int H = 1 + int(rng.next_u64() % 9);
    const int W = 1 + int(rng.next_u64() % 9);
    const auto x = random_tensor(Shape{N, Ci, H, W}, rng);
    const auto w = random_tensor(Shape{Ci, Co, 2, 2}, rng);
    const auto b = random_tensor(Shape{1, Co, 1, 1}, rng);

    Tensor<double> y1(Shape{N, Co, 2 * H, 2 * W}), y2(y1.shape);
    kern::ref::upconv2_fwd(x, w, b, y1);
    kern::par::upconv2_fwd(x, w, b, y2);
    REQUIRE(y1.data == y2.data);

    const auto gy = random_tensor(y1.shape, rng);
    Tensor<double> gx1(x.shape), gx2(x.shape), gw1(w.shape), gw2(w.shape), gb1(b.shape),
        gb2(b.shape);
    kern::ref::upconv2_bwd_input(gy, w, gx1);
    kern::par::upconv2_bwd_input(gy, w, gx2);
    REQUIRE(gx1.data == gx2.data);
    kern::ref::upconv2_bwd_params(x, gy, gw1, gb1);
    kern::par::upconv2_bwd_params(x, gy, gw2, gb2);
    REQUIRE(gw1.data == gw2.data);
    REQUIRE(gb1.data == gb2.data);
  }
}

TEST_CASE("maxpool2 and elementwise ops: par == ref bitwise") {
  Rng rng(303);
  for (int trial = 0; trial < 6; ++trial) {
    const int N = 1 + int(rng.next_u64() % 3);
    const int C = 1 + int(rng.next_u64() % 6);
    const int H = 2 * (1 + int(rng.next_u64() % 8));
    const int W = 2 * (1 + int(rng.next_u64() % 8));
    const auto x = random_tensor(Shape{N, C, H, W}, rng);

    Tensor<double> y1(Shape{N, C, H / 2, W / 2}), y2(y1.shape);
    std::vector<int64_t> am1, am2;
    kern::ref::maxpool2_fwd(x, y1, am1);
    kern::par::maxpool2_fwd(x, y2, am2);
    REQUIRE(y1.data == y2.data);
    REQUIRE(am1 == am2);

    Tensor<double> r1(x.shape), r2(x.shape);
    kern::ref::relu_fwd(x, r1);
    kern::par::relu_fwd(x, r2);
    REQUIRE(r1.data == r2.data);

    Tensor<double> s1(x.shape), s2(x.shape);
    kern::ref::sigmoid_fwd(x, s1);
    kern::par::sigmoid_fwd(x, s2);
    REQUIRE(s1.data == s2.data);
  }
}

TEST_CASE("conv2d identity kernel reproduces input") {
  Rng rng(404);
  const auto x = random_tensor(Shape{2, 3, 6, 6}, rng);
  Tensor<double> w(Shape{3, 3, 3, 3});
  for (int c = 0; c < 3; ++c) w.at(c, c, 1, 1) = 1.0;  // center tap only
  Tensor<double> b(Shape{1, 3, 1, 1});
  Tensor<double> y(x.shape);
  kern::par::conv2d_fwd(x, w, b, y);
  REQUIRE(y.data == x.data);
}

TEST_CASE("conv2d on a 1x1 spatial input reduces to the center tap") {
  Rng rng(505);
  const auto x = random_tensor(Shape{1, 4, 1, 1}, rng);
  const auto w = random_tensor(Shape{2, 4, 3, 3}, rng);
  const auto b = random_tensor(Shape{1, 2, 1, 1}, rng);
  Tensor<double> y(Shape{1, 2, 1, 1});
  kern::par::conv2d_fwd(x, w, b, y);
  for (int co = 0; co < 2; ++co) {
    double want = b.data[co];
    for (int ci = 0; ci < 4; ++ci) want += w.at(co, ci, 1, 1) * x.data[ci];
    CHECK(y.data[co] == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("maxpool2 examples and tie handling") {
  Tensor<double> x(Shape{1, 1, 2, 2}, {1, 2, 3, 4});
  Tensor<double> y(Shape{1, 1, 1, 1});
  std::vector<int64_t> am;
  kern::par::maxpool2_fwd(x, y, am);
  CHECK(y.data[0] == 4.0);

  Tensor<double> c(Shape{1, 2, 4, 4});
  c.fill(0.5);
  Tensor<double> yc(Shape{1, 2, 2, 2});
  kern::par::maxpool2_fwd(c, yc, am);
  for (double v : yc.data) CHECK(v == 0.5);
  // tie: gradient must route to the first (row-major) max, the top-left cell
  for (size_t i = 0; i < am.size(); ++i) {
    const int oy = int(i / 2) % 2, ox = int(i % 2);
    const int64_t plane_base = int64_t(i / 4) * 16;
    CHECK(am[i] == plane_base + (2 * oy) * 4 + 2 * ox);
  }

  Tensor<double> odd(Shape{1, 1, 3, 3});
  Tensor<double> yo(Shape{1, 1, 1, 1});
  CHECK_THROWS_AS(kern::par::maxpool2_fwd(odd, yo, am), std::invalid_argument);
}

TEST_CASE("upconv2 of a 1x1 input broadcasts weight times input plus bias") {
  Rng rng(606);
  const auto x = random_tensor(Shape{1, 3, 1, 1}, rng);
  const auto w = random_tensor(Shape{3, 2, 2, 2}, rng);
  const auto b = random_tensor(Shape{1, 2, 1, 1}, rng);
  Tensor<double> y(Shape{1, 2, 2, 2});
  kern::par::upconv2_fwd(x, w, b, y);
  for (int co = 0; co < 2; ++co)
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx) {
        double want = b.data[co];
        for (int ci = 0; ci < 3; ++ci) want += w.at(ci, co, dy, dx) * x.data[ci];
        CHECK(y.at(0, co, dy, dx) == doctest::Approx(want).epsilon(1e-12));
      }

  // linearity with zero bias
  Tensor<double> zb(Shape{1, 2, 1, 1});
  Tensor<double> xs = x;
  for (auto& v : xs.data) v *= 3.5;
  Tensor<double> y1(Shape{1, 2, 2, 2}), y2(Shape{1, 2, 2, 2});
  kern::par::upconv2_fwd(x, w, zb, y1);
  kern::par::upconv2_fwd(xs, w, zb, y2);
  for (int64_t i = 0; i < y1.size(); ++i)
    CHECK(y2.data[i] == doctest::Approx(3.5 * y1.data[i]).epsilon(1e-12));
}

TEST_CASE("shape validation errors") {
  Tensor<double> x(Shape{1, 3, 4, 4}), w(Shape{2, 4, 3, 3}), b(Shape{1, 2, 1, 1});
  Tensor<double> y(Shape{1, 2, 4, 4});
  CHECK_THROWS_AS(kern::par::conv2d_fwd(x, w, b, y), std::invalid_argument);  // channel mismatch
  Tensor<double> uw(Shape{4, 2, 2, 2});
  Tensor<double> uy(Shape{1, 2, 8, 8});
  CHECK_THROWS_AS(kern::par::upconv2_fwd(x, uw, b, uy), std::invalid_argument);
  Tensor<double> a(Shape{1, 2, 4, 4}), bb(Shape{1, 3, 4, 4}), yy(Shape{1, 2, 4, 4});
  CHECK_THROWS_AS(kern::par::add_fwd(a, bb, yy), std::invalid_argument);
}
