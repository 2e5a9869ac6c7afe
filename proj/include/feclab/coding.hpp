#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace feclab {

using Bits = std::vector<uint8_t>;  // elements are 0 or 1

// Rate-1/2 feedforward convolutional code.
//
// Tap convention: bit `memory` of a generator taps the current input, bit 0
// the oldest delayed input, so octal literals match the textbook codes:
// (7,5) with memory 2 is [1+D+D^2, 1+D^2].
struct CodeSpec {
  std::array<uint32_t, 2> generators{07, 05};
  int memory = 2;  // v delay elements, 2^v trellis states

  int num_states() const { return 1 << memory; }
  void validate() const;  // throws std::invalid_argument
  std::string name() const;  // octal, CSV-safe, e.g. "7_5_v2"
  bool operator==(const CodeSpec&) const = default;
};

// One output pair per trellis step; zero-tail termination appends `memory`
// flush steps, so a length-L message yields L+v pairs and the encoder ends
// in the all-zero state.
struct CodeWord {
  std::vector<std::array<uint8_t, 2>> pairs;

  int steps() const { return static_cast<int>(pairs.size()); }
};

CodeWord encode(const CodeSpec& spec, const Bits& msg);

// Flat serialization order [b0(0), b1(0), b0(1), b1(1), ...].
Bits interleave(const CodeWord& cw);
CodeWord deinterleave(const Bits& flat);

}  // namespace feclab
