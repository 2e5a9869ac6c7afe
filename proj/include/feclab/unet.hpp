#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "feclab/rng.hpp"
#include "feclab/tape.hpp"

namespace feclab {

// Fully convolutional U-Net: no fully connected layers anywhere. depth is
// the number of pool/upsample stages; channel widths double per level.
struct UNetConfig {
  int depth = 2;
  int base_channels = 8;
  int in_channels = 2;
  int out_channels = 1;

  void validate() const {
    if (depth < 0 || depth > 10) throw std::invalid_argument("net depth out of range");
    if (base_channels < 1) throw std::invalid_argument("base_channels must be >= 1");
    if (in_channels < 1 || out_channels < 1)
      throw std::invalid_argument("channel counts must be >= 1");
  }

  bool operator==(const UNetConfig&) const = default;
};

template <typename T>
struct NamedParam {
  std::string name;
  std::vector<int64_t> dims;  // logical dims, e.g. [Co,Ci,3,3] or [Co]
  Tensor<T> value;            // internal 4-D layout; biases are [1,Co,1,1]
};

// Architecture: depth down-blocks (double conv3x3+relu with an additive
// residual bridging the block, then 2x2 maxpool), a bottleneck block, depth
// up-blocks (2x2 stride-2 upconv, concat with the matching skip, double conv
// with residual), and a 1x1 conv + sigmoid head. Residuals use a 1x1
// projection whenever channel widths differ.
template <typename T>
class UNet {
 public:
  UNet(const UNetConfig& cfg, uint64_t init_seed) : cfg_(cfg) {
    cfg.validate();
    build_params();
    init_weights(init_seed);
  }

  const UNetConfig& config() const { return cfg_; }
  std::vector<NamedParam<T>>& params() { return params_; }
  const std::vector<NamedParam<T>>& params() const { return params_; }

  int64_t count_params() const {
    int64_t total = 0;
    for (const auto& p : params_) total += p.value.size();
    return total;
  }

  struct Bound {
    int output = -1;
    std::vector<int> param_nodes;  // node id per params() entry, same order
  };

  // Builds the graph on `tape` starting from `input` (a leaf the caller
  // created). Input spatial dims must be divisible by 2^depth.
  Bound forward(Tape<T>& tape, int input) const {
    const Shape in_shape = tape.value(input).shape;
    check_input(in_shape);

    Bound bound;
    bound.param_nodes.reserve(params_.size());
    for (const auto& p : params_) bound.param_nodes.push_back(tape.leaf(p.value));

    size_t pi = 0;  // walks params in registry order
    auto next3 = [&](bool has_proj) {
      struct Ids {
        int w1, b1, w2, b2, wp, bp;
      } ids{};
      ids.w1 = bound.param_nodes[pi++];
      ids.b1 = bound.param_nodes[pi++];
      ids.w2 = bound.param_nodes[pi++];
      ids.b2 = bound.param_nodes[pi++];
      ids.wp = has_proj ? bound.param_nodes[pi++] : -1;
      ids.bp = has_proj ? bound.param_nodes[pi++] : -1;
      return ids;
    };
    auto block = [&](int x, int in_c, int out_c) {
      auto ids = next3(in_c != out_c);
      int h = tape.relu(tape.conv2d(x, ids.w1, ids.b1));
      h = tape.relu(tape.conv2d(h, ids.w2, ids.b2));
      const int skip = (in_c != out_c) ? tape.conv2d(x, ids.wp, ids.bp) : x;
      return tape.add_residual(h, skip);
    };

    int x = input;
    int ch = cfg_.in_channels;
    std::vector<int> skips;
    for (int d = 0; d < cfg_.depth; ++d) {
      x = block(x, ch, level_channels(d));
      ch = level_channels(d);
      skips.push_back(x);
      x = tape.maxpool2(x);
    }
    x = block(x, ch, level_channels(cfg_.depth));
    ch = level_channels(cfg_.depth);
    for (int d = cfg_.depth - 1; d >= 0; --d) {
      const int up_w = bound.param_nodes[pi++];
      const int up_b = bound.param_nodes[pi++];
      x = tape.upconv2(x, up_w, up_b);
      x = tape.concat_channels(skips[d], x);
      x = block(x, 2 * level_channels(d), level_channels(d));
      ch = level_channels(d);
    }
    const int head_w = bound.param_nodes[pi++];
    const int head_b = bound.param_nodes[pi++];
    bound.output = tape.sigmoid(tape.conv2d(x, head_w, head_b));
    if (pi != params_.size()) throw std::logic_error("unet: param walk out of sync");
    return bound;
  }

  // Tape-free forward for inference; runs the same kernels in the same
  // order, so it is bit-identical to forward() on a tape.
  Tensor<T> infer(const Tensor<T>& input) const {
    Tape<T> tape;
    return tape.value(forward(tape, tape.leaf(input)).output);
  }

 private:
  int level_channels(int level) const { return cfg_.base_channels << level; }

  void check_input(const Shape& s) const {
    if (s.c != cfg_.in_channels) throw std::invalid_argument("unet: input channel mismatch");
    const int unit = 1 << cfg_.depth;
    if (s.h % unit != 0 || s.w % unit != 0)
      throw std::invalid_argument("unet: input spatial dims not divisible by 2^depth");
  }

  void add_conv(const std::string& name, int out_c, int in_c, int k) {
    params_.push_back({name + ".weight", {out_c, in_c, k, k}, Tensor<T>(Shape{out_c, in_c, k, k})});
    params_.push_back({name + ".bias", {out_c}, Tensor<T>(Shape{1, out_c, 1, 1})});
  }

  void add_upconv(const std::string& name, int in_c, int out_c) {
    params_.push_back({name + ".weight", {in_c, out_c, 2, 2}, Tensor<T>(Shape{in_c, out_c, 2, 2})});
    params_.push_back({name + ".bias", {out_c}, Tensor<T>(Shape{1, out_c, 1, 1})});
  }

  void add_block(const std::string& name, int in_c, int out_c) {
    add_conv(name + ".conv1", out_c, in_c, 3);
    add_conv(name + ".conv2", out_c, out_c, 3);
    if (in_c != out_c) add_conv(name + ".proj", out_c, in_c, 1);
  }

  void build_params() {
    int ch = cfg_.in_channels;
    for (int d = 0; d < cfg_.depth; ++d) {
      add_block("down" + std::to_string(d), ch, level_channels(d));
      ch = level_channels(d);
    }
    add_block("bottleneck", ch, level_channels(cfg_.depth));
    for (int d = cfg_.depth - 1; d >= 0; --d) {
      add_upconv("up" + std::to_string(d) + ".upconv", level_channels(d + 1), level_channels(d));
      add_block("up" + std::to_string(d), 2 * level_channels(d), level_channels(d));
    }
    add_conv("head", cfg_.out_channels, level_channels(0), 1);
  }

  // He initialization: weights ~ N(0, 2/fan_in), biases zero. For the
  // transposed conv, fan_in is taken from the adjoint convolution
  // (out_channels * k^2), the usual convention for upsampling layers.
  void init_weights(uint64_t seed) {
    Rng rng = Rng::derive(seed, {0x756e6574});  // "unet"
    for (auto& p : params_) {
      if (p.name.ends_with(".bias")) {
        p.value.fill(T(0));
        continue;
      }
      const int64_t fan_in = p.dims[1] * p.dims[2] * p.dims[3];
      const double scale = std::sqrt(2.0 / double(fan_in));
      for (auto& v : p.value.data) v = T(scale * rng.next_gaussian());
    }
  }

  UNetConfig cfg_;
  std::vector<NamedParam<T>> params_;
};

}  // namespace feclab
