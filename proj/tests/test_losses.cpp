#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "feclab/losses.hpp"
#include "testutil.hpp"

using namespace feclab;
using testutil::max_grad_rel_err;
using testutil::random_tensor;

namespace {

std::vector<uint8_t> prefix_mask(int cells, int ones) {
  std::vector<uint8_t> m(cells, 0);
  for (int i = 0; i < ones; ++i) m[i] = 1;
  return m;
}

Tensor<double> random_bits_grid(Shape s, Rng& rng) {
  Tensor<double> t(s);
  for (auto& v : t.data) v = double(rng.next_bit());
  return t;
}

double loss_value(int (*make)(Tape<double>&, int, const Tensor<double>&,
                              const std::vector<uint8_t>&),
                  const Tensor<double>& p, const Tensor<double>& u,
                  const std::vector<uint8_t>& mask) {
  Tape<double> tape;
  return tape.value(make(tape, tape.leaf(p), u, mask)).data[0];
}

}  // namespace

TEST_CASE("bce examples") {
  const auto mask = prefix_mask(16, 12);
  Rng rng(1);
  Tensor<double> u(Shape{1, 1, 4, 4});
  for (auto& v : u.data) v = double(rng.next_bit());

  // perfect prediction: only the clamp keeps the loss nonzero
  const double perfect = loss_value(bce_loss<double>, u, u, mask);
  CHECK(perfect > 0.0);
  CHECK(perfect <= -std::log(1.0 - kBceEps) + 1e-12);

  Tensor<double> half(Shape{1, 1, 4, 4});
  half.fill(0.5);
  CHECK(loss_value(bce_loss<double>, half, u, mask) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  CHECK_THROWS_AS(loss_value(bce_loss<double>, half, u, prefix_mask(16, 0)),
                  std::invalid_argument);
}

TEST_CASE("gradcheck: bce") {
  Rng rng(2);
  const auto mask = prefix_mask(16, 11);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = random_tensor(Shape{1, 1, 4, 4}, rng, 0.1, 0.9);  // FD validity: |d3/dp3| ~ 1/p^3
    auto u = random_bits_grid(Shape{1, 1, 4, 4}, rng);
    const double err = max_grad_rel_err(
        [&](Tape<double>& t, const std::vector<int>& in) { return bce_loss(t, in[0], u, mask); },
        {&p});
    CHECK(err < 1e-4);
  }
}

TEST_CASE("mse and psnr examples") {
  const auto mask = prefix_mask(16, 16);
  Tensor<double> f(Shape{1, 1, 4, 4}), g(Shape{1, 1, 4, 4});
  g.fill(0.5);
  const MsePsnr r = mse_and_psnr(f, g, mask);
  CHECK(r.mse == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(r.psnr_db == doctest::Approx(6.0206).epsilon(1e-4));

  const MsePsnr same = mse_and_psnr(g, g, mask);
  CHECK(same.mse == 0.0);
  CHECK(std::isinf(same.psnr_db));
  CHECK(same.psnr_db > 0);

  CHECK_THROWS_AS(mse_and_psnr(f, g, prefix_mask(16, 0)), std::invalid_argument);
}

TEST_CASE("gradcheck: mse") {
  Rng rng(3);
  const auto mask = prefix_mask(16, 9);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = random_tensor(Shape{1, 1, 4, 4}, rng, 0.0, 1.0);
    auto u = random_bits_grid(Shape{1, 1, 4, 4}, rng);
    const double err = max_grad_rel_err(
        [&](Tape<double>& t, const std::vector<int>& in) { return mse_loss(t, in[0], u, mask); },
        {&p});
    CHECK(err < 1e-4);
  }
}

TEST_CASE("ssim identities and closed forms") {
  const auto mask = prefix_mask(16, 13);
  Rng rng(4);
  const auto f = random_tensor(Shape{1, 1, 4, 4}, rng, 0.0, 1.0);
  CHECK(ssim(f, f, mask) == doctest::Approx(1.0).epsilon(1e-9));

  // constant images 1 and 0: c = s = 1, l = C1 / (1 + C1)
  Tensor<double> ones(Shape{1, 1, 4, 4}), zeros(Shape{1, 1, 4, 4});
  ones.fill(1.0);
  const double expect = 1e-4 / (1.0 + 1e-4);
  CHECK(ssim(ones, zeros, mask) == doctest::Approx(expect).epsilon(1e-9));
  CHECK(ssim(ones, zeros, mask) == doctest::Approx(9.999e-5).epsilon(1e-3));

  // symmetry and range on random grids
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = random_tensor(Shape{1, 1, 4, 4}, rng, 0.0, 1.0);
    const auto b = random_tensor(Shape{1, 1, 4, 4}, rng, 0.0, 1.0);
    const double sab = ssim(a, b, mask);
    CHECK(sab == doctest::Approx(ssim(b, a, mask)).epsilon(1e-12));
    CHECK(sab <= 1.0);
    CHECK(sab >= -1.0);
    CHECK(sab < 1.0);  // distinct grids cannot reach 1
  }
}

TEST_CASE("gradcheck: ssim loss") {
  Rng rng(5);
  const auto mask = prefix_mask(16, 12);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = random_tensor(Shape{1, 1, 4, 4}, rng, 0.1, 0.9);
    auto u = random_bits_grid(Shape{1, 1, 4, 4}, rng);
    const double err = max_grad_rel_err(
        [&](Tape<double>& t, const std::vector<int>& in) { return ssim_loss(t, in[0], u, mask); },
        {&p});
    CHECK(err < 1e-4);
  }
}

TEST_CASE("losses ignore padding cells entirely") {
  const auto mask = prefix_mask(16, 10);
  Rng rng(6);
  auto p = random_tensor(Shape{1, 1, 4, 4}, rng, 0.1, 0.9);
  auto u = random_bits_grid(Shape{1, 1, 4, 4}, rng);
  const double bce0 = loss_value(bce_loss<double>, p, u, mask);
  const double mse0 = loss_value(mse_loss<double>, p, u, mask);
  const double ssim0 = loss_value(ssim_loss<double>, p, u, mask);
  // poison every masked-out cell with NaN; nothing may change
  for (int i = 10; i < 16; ++i) {
    p.data[i] = std::nan("");
    u.data[i] = std::nan("");
  }
  CHECK(loss_value(bce_loss<double>, p, u, mask) == bce0);
  CHECK(loss_value(mse_loss<double>, p, u, mask) == mse0);
  CHECK(loss_value(ssim_loss<double>, p, u, mask) == ssim0);
}

TEST_CASE("ber worked examples") {
  const BerReport r = ber({0.9, 0.2, 0.6}, {1, 0, 0});
  CHECK(r.bit_errors == 1);
  CHECK(r.bits_counted == 3);
  CHECK(r.ber == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  CHECK(ber({0.9, 0.1}, {1, 0}).ber == 0.0);
  // strict inequality: 0.5 decodes to bit 0
  CHECK(ber({0.5, 0.5, 0.5}, {0, 0, 0}).ber == 0.0);
  CHECK(ber({0.5}, {1}).ber == 1.0);
  CHECK_THROWS_AS(ber({0.5}, {0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(ber({}, {}), std::invalid_argument);
}

TEST_CASE("nve examples and flooring") {
  CHECK(nve({0.1, 0.01}, {0.1, 0.01}, 100000) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(nve({0.2, 0.02}, {0.1, 0.01}, 100000) == doctest::Approx(2.0).epsilon(1e-12));
  // zero Viterbi BER floors at 1/bits
  CHECK(nve({1e-6}, {0.0}, 1000000) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(nve({}, {}, 1000), std::invalid_argument);
  CHECK_THROWS_AS(nve({0.1}, {0.1, 0.2}, 1000), std::invalid_argument);
}
