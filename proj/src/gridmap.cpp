#include "feclab/gridmap.hpp"

#include <stdexcept>

namespace feclab {

GridSpec grid_spec_for(int info_bits, int memory, int depth) {
  if (info_bits < 1) throw std::invalid_argument("info_bits must be >= 1");
  if (memory < 0) throw std::invalid_argument("memory must be >= 0");
  if (depth < 0 || depth > 16) throw std::invalid_argument("depth out of range");

  GridSpec gs;
  gs.info_bits = info_bits;
  gs.memory = memory;
  gs.depth = depth;
  const int unit = 1 << depth;
  const int64_t need = int64_t(info_bits) + memory;
  int side = unit;
  while (int64_t(side) * side < need) side += unit;
  gs.side = side;
  return gs;
}

InputGrid to_input_grid(const SymbolBlock& received, const GridSpec& gs) {
  const int steps = gs.valid_steps();
  if (static_cast<int>(received.size()) != 2 * steps)
    throw std::invalid_argument("to_input_grid: received length mismatch");

  InputGrid g;
  g.values = Tensor<double>(Shape{1, 2, gs.side, gs.side});
  g.mask.assign(gs.cells(), 0);
  const int cells = gs.cells();
  for (int t = 0; t < steps; ++t) {
    g.values.data[t] = received[2 * t];          // channel 0: stream 0
    g.values.data[cells + t] = received[2 * t + 1];  // channel 1: stream 1
    g.mask[t] = 1;
  }
  return g;
}

TargetGrid to_target_grid(const Bits& msg, const GridSpec& gs) {
  if (static_cast<int>(msg.size()) != gs.info_bits)
    throw std::invalid_argument("to_target_grid: message length mismatch");

  TargetGrid g;
  g.values = Tensor<double>(Shape{1, 1, gs.side, gs.side});
  g.mask.assign(gs.cells(), 0);
  for (int k = 0; k < gs.info_bits; ++k) {
    if (msg[k] > 1) throw std::invalid_argument("to_target_grid: bits must be 0 or 1");
    g.values.data[k] = double(msg[k]);
    g.mask[k] = 1;
  }
  return g;
}

}  // namespace feclab
