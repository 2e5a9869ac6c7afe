#include <doctest.h>

#include <stdexcept>

#include "feclab/losses.hpp"
#include "feclab/unet.hpp"
#include "testutil.hpp"

using namespace feclab;
using testutil::max_grad_rel_err;
using testutil::random_tensor;

namespace {

// analytic parameter count, written independently of the model registry
int64_t analytic_param_count(const UNetConfig& cfg) {
  auto conv = [](int64_t out, int64_t in, int64_t k) { return out * in * k * k + out; };
  auto block = [&](int64_t in, int64_t out) {
    int64_t n = conv(out, in, 3) + conv(out, out, 3);
    if (in != out) n += conv(out, in, 1);
    return n;
  };
  int64_t total = 0;
  int64_t ch = cfg.in_channels;
  for (int d = 0; d < cfg.depth; ++d) {
    const int64_t out = int64_t(cfg.base_channels) << d;
    total += block(ch, out);
    ch = out;
  }
  const int64_t bottleneck = int64_t(cfg.base_channels) << cfg.depth;
  total += block(ch, bottleneck);
  ch = bottleneck;
  for (int d = cfg.depth - 1; d >= 0; --d) {
    const int64_t out = int64_t(cfg.base_channels) << d;
    total += ch * out * 2 * 2 + out;  // upconv
    total += block(2 * out, out);
    ch = out;
  }
  total += conv(cfg.out_channels, ch, 1);
  return total;
}

}  // namespace

TEST_CASE("parameter count matches the analytic per-layer sum") {
  UNetConfig small{1, 4, 2, 1};
  CHECK(UNet<double>(small, 1).count_params() == analytic_param_count(small));
  CHECK(analytic_param_count(small) == 1769);  // hand-checked layer by layer

  UNetConfig d0{0, 8, 2, 1};
  CHECK(UNet<double>(d0, 1).count_params() == analytic_param_count(d0));

  UNetConfig toy{2, 8, 2, 1};
  CHECK(UNet<double>(toy, 1).count_params() == analytic_param_count(toy));

  // a deep, wide configuration lands in the millions
  UNetConfig big{3, 64, 2, 1};
  const int64_t big_count = analytic_param_count(big);
  CHECK(big_count > 1000000);
  CHECK(UNet<double>(big, 1).count_params() == big_count);
}

TEST_CASE("same seed gives bit-identical weights, different seed does not") {
  const UNetConfig cfg{1, 4, 2, 1};
  UNet<float> a(cfg, 42), b(cfg, 42), c(cfg, 43);
  bool any_diff = false;
  for (size_t i = 0; i < a.params().size(); ++i) {
    REQUIRE(a.params()[i].value.data == b.params()[i].value.data);
    if (a.params()[i].value.data != c.params()[i].value.data) any_diff = true;
  }
  CHECK(any_diff);
  // biases start at zero
  for (const auto& p : a.params())
    if (p.name.ends_with(".bias"))
      for (float v : p.value.data) CHECK(v == 0.0f);
}

TEST_CASE("the network is fully convolutional: no dense layers anywhere") {
  UNet<float> net(UNetConfig{2, 8, 2, 1}, 5);
  for (const auto& p : net.params()) {
    if (p.name.ends_with(".bias")) {
      CHECK(p.dims.size() == 1);
      continue;
    }
    REQUIRE(p.dims.size() == 4);
    CHECK(p.dims[2] <= 3);  // conv kernels only, never a flattened matrix
    CHECK(p.dims[3] <= 3);
  }
}

TEST_CASE("forward shape, range and determinism") {
  // channel-realistic inputs: +-1 symbols plus noise
  const UNetConfig cfg{1, 4, 2, 1};
  UNet<double> net(cfg, 7);
  Rng rng(8);
  Tensor<double> x(Shape{3, 2, 8, 8});
  for (auto& v : x.data) v = (rng.next_bit() ? 1.0 : -1.0) + 0.7 * rng.next_gaussian();
  const Tensor<double> y = net.infer(x);
  CHECK(y.shape == Shape{3, 1, 8, 8});
  for (double v : y.data) {
    CHECK(std::isfinite(v));
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
  const Tensor<double> y2 = net.infer(x);
  CHECK(y.data == y2.data);

  // a deeper untrained net can push logits into sigmoid saturation, where
  // the open interval only survives up to double rounding
  const UNetConfig deep{2, 8, 2, 1};
  UNet<double> net2(deep, 9);
  const auto harsh = random_tensor(Shape{2, 2, 8, 8}, rng, -2.0, 2.0);
  const Tensor<double> y3 = net2.infer(harsh);
  for (double v : y3.data) {
    CHECK(std::isfinite(v));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("batch rows decode independently") {
  const UNetConfig cfg{1, 4, 2, 1};
  UNet<double> net(cfg, 9);
  Rng rng(10);
  const auto batch = random_tensor(Shape{4, 2, 4, 4}, rng);
  const Tensor<double> y_all = net.infer(batch);
  for (int n = 0; n < 4; ++n) {
    Tensor<double> one(Shape{1, 2, 4, 4});
    std::copy_n(batch.data.begin() + n * 32, 32, one.data.begin());
    const Tensor<double> y_one = net.infer(one);
    for (int i = 0; i < 16; ++i) CHECK(y_one.data[i] == y_all.data[n * 16 + i]);
  }
}

TEST_CASE("tape forward equals infer bitwise") {
  const UNetConfig cfg{2, 4, 2, 1};
  UNet<double> net(cfg, 11);
  Rng rng(12);
  const auto x = random_tensor(Shape{1, 2, 8, 8}, rng);
  Tape<double> tape;
  const auto bound = net.forward(tape, tape.leaf(x));
  CHECK(tape.value(bound.output).data == net.infer(x).data);
}

TEST_CASE("input validation") {
  const UNetConfig cfg{2, 4, 2, 1};
  UNet<double> net(cfg, 1);
  CHECK_THROWS_AS(net.infer(Tensor<double>(Shape{1, 2, 6, 6})), std::invalid_argument);
  CHECK_THROWS_AS(net.infer(Tensor<double>(Shape{1, 3, 8, 8})), std::invalid_argument);
}

TEST_CASE("end-to-end gradient through the whole U-Net matches finite differences") {
  const UNetConfig cfg{1, 2, 2, 1};
  UNet<double> net(cfg, 21);
  Rng rng(22);
  auto x = random_tensor(Shape{1, 2, 8, 8}, rng);
  Tensor<double> target(Shape{1, 1, 8, 8});
  for (auto& v : target.data) v = double(rng.next_bit());
  std::vector<uint8_t> mask(64, 0);
  for (int i = 0; i < 50; ++i) mask[i] = 1;

  // loss w.r.t. the input, every element
  const double err_input = max_grad_rel_err(
      [&](Tape<double>& t, const std::vector<int>& in) {
        const auto bound = net.forward(t, in[0]);
        return bce_loss(t, bound.output, target, mask);
      },
      {&x});
  CHECK(err_input < 1e-3);

  // loss w.r.t. the parameters, probing a few elements of every tensor
  auto loss_value = [&] {
    Tape<double> t;
    const auto bound = net.forward(t, t.leaf(x));
    return t.value(bce_loss(t, bound.output, target, mask)).data[0];
  };
  Tape<double> tape;
  const auto bound = net.forward(tape, tape.leaf(x));
  tape.backward(bce_loss(tape, bound.output, target, mask));

  const double h = 1e-3;
  double worst = 0.0;
  for (size_t pi = 0; pi < net.params().size(); ++pi) {
    Tensor<double>& pv = net.params()[pi].value;
    const Tensor<double>& analytic = tape.grad(bound.param_nodes[pi]);
    const int64_t stride = std::max<int64_t>(1, pv.size() / 5);
    for (int64_t e = 0; e < pv.size(); e += stride) {
      const double keep = pv.data[e];
      pv.data[e] = keep + h;
      const double fp = loss_value();
      pv.data[e] = keep - h;
      const double fm = loss_value();
      pv.data[e] = keep;
      const double fd = (fp - fm) / (2.0 * h);
      const double an = analytic.data[e];
      worst = std::max(worst, std::fabs(an - fd) / std::max({std::fabs(an), std::fabs(fd), 1e-8}));
    }
  }
  CHECK(worst < 1e-3);
}
