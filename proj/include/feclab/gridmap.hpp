#pragma once

#include <cstdint>
#include <vector>

#include "feclab/channel.hpp"
#include "feclab/tensor.hpp"

namespace feclab {

// Square 2-D embedding of one coded block. The side is the smallest multiple
// of 2^depth whose square holds the L+v trellis steps, so pooling by 2 never
// truncates; cells beyond the valid steps are padding.
struct GridSpec {
  int info_bits = 0;  // L
  int memory = 0;     // v
  int depth = 0;      // U-Net depth D; side % 2^depth == 0
  int side = 0;

  int valid_steps() const { return info_bits + memory; }
  int cells() const { return side * side; }
  bool operator==(const GridSpec&) const = default;
};

GridSpec grid_spec_for(int info_bits, int memory, int depth);

// Channel c holds coded stream c, filled row-major over the first L+v cells;
// padding cells are exactly 0.0 (an erasure under the +-1 BPSK convention).
struct InputGrid {
  Tensor<double> values;      // [1, 2, side, side]
  std::vector<uint8_t> mask;  // side*side, 1 on the first L+v row-major cells
};

// Single channel of message bits over the first L cells; the v tail steps are
// present in the input grid but excluded here, so no loss ever scores them.
struct TargetGrid {
  Tensor<double> values;      // [1, 1, side, side]
  std::vector<uint8_t> mask;  // 1 on the first L row-major cells
};

InputGrid to_input_grid(const SymbolBlock& received, const GridSpec& gs);
TargetGrid to_target_grid(const Bits& msg, const GridSpec& gs);

// Row-major read of the first L cells of a [1,1,side,side] probability grid;
// padding cells are never touched.
template <typename T>
std::vector<double> from_output_grid(const Tensor<T>& probs, const GridSpec& gs) {
  if (probs.shape.n != 1 || probs.shape.c != 1 || probs.shape.h != gs.side ||
      probs.shape.w != gs.side)
    throw std::invalid_argument("from_output_grid: shape mismatch");
  std::vector<double> p(gs.info_bits);
  for (int k = 0; k < gs.info_bits; ++k) p[k] = double(probs.data[k]);
  return p;
}

}  // namespace feclab
