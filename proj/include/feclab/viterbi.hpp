#pragma once

#include <array>
#include <vector>

#include "feclab/channel.hpp"
#include "feclab/coding.hpp"

namespace feclab {

// Precomputed state-transition and output tables. States hold the v most
// recent inputs (newest at bit v-1); each state has exactly two successors.
struct Trellis {
  CodeSpec spec;
  int num_states = 0;
  std::vector<std::array<int, 2>> next_state;                    // [state][input]
  std::vector<std::array<std::array<uint8_t, 2>, 2>> outputs;    // [state][input]
};

Trellis build_trellis(const CodeSpec& spec);

struct DecodeResult {
  Bits message;        // L info bits, tail inputs stripped
  double path_metric;  // squared Euclidean distance of the winning codeword
};

// Exact ML sequence decoding for zero-tail terminated blocks over AWGN with
// soft (squared Euclidean) branch metrics. The path starts and ends in state
// 0; the final v trellis steps admit only the zero input. Metric ties keep
// the survivor through the lower-numbered predecessor state.
DecodeResult viterbi_decode(const Trellis& trellis, const SymbolBlock& received);

// Exhaustive ML oracle: scores all 2^L messages, ties broken by the
// lexicographically smallest message. Guarded to L <= 20.
Bits brute_force_ml(const CodeSpec& spec, const SymbolBlock& received);

}  // namespace feclab
