#include "feclab/coding.hpp"

#include <bit>
#include <sstream>
#include <stdexcept>

namespace feclab {

namespace {

inline uint8_t parity(uint32_t x) { return uint8_t(std::popcount(x) & 1); }

std::string to_octal(uint32_t v) {
  std::ostringstream os;
  os << std::oct << v;
  return os.str();
}

}  // namespace

void CodeSpec::validate() const {
  if (memory < 0) throw std::invalid_argument("memory must be non-negative");
  if (memory > 20) throw std::invalid_argument("memory too large");
  const uint32_t window_mask = (memory >= 31) ? ~0u : ((1u << (memory + 1)) - 1u);
  for (uint32_t g : generators) {
    if (g == 0) throw std::invalid_argument("generator must be non-zero");
    if ((g & ~window_mask) != 0) throw std::invalid_argument("generator/memory mismatch");
  }
  // at least one stream must tap the current input, otherwise the code is
  // a pure delay and not invertible at the first step
  const uint32_t current_tap = 1u << memory;
  if (((generators[0] | generators[1]) & current_tap) == 0)
    throw std::invalid_argument("no generator taps the current input");
}

std::string CodeSpec::name() const {
  return to_octal(generators[0]) + "_" + to_octal(generators[1]) + "_v" + std::to_string(memory);
}

CodeWord encode(const CodeSpec& spec, const Bits& msg) {
  spec.validate();
  if (msg.empty()) throw std::invalid_argument("empty message");
  for (uint8_t b : msg)
    if (b > 1) throw std::invalid_argument("message bits must be 0 or 1");

  const int v = spec.memory;
  const int total = static_cast<int>(msg.size()) + v;
  CodeWord cw;
  cw.pairs.resize(total);

  // state holds the v most recent inputs, newest at bit v-1
  uint32_t state = 0;
  for (int t = 0; t < total; ++t) {
    const uint32_t u = (t < static_cast<int>(msg.size())) ? msg[t] : 0;  // zero tail
    const uint32_t window = (u << v) | state;
    cw.pairs[t] = {parity(window & spec.generators[0]), parity(window & spec.generators[1])};
    state = (v == 0) ? 0 : ((u << (v - 1)) | (state >> 1));
  }
  return cw;
}

Bits interleave(const CodeWord& cw) {
  Bits flat;
  flat.reserve(cw.pairs.size() * 2);
  for (const auto& p : cw.pairs) {
    flat.push_back(p[0]);
    flat.push_back(p[1]);
  }
  return flat;
}

CodeWord deinterleave(const Bits& flat) {
  if (flat.size() % 2 != 0) throw std::invalid_argument("flat bit count must be even");
  CodeWord cw;
  cw.pairs.resize(flat.size() / 2);
  for (size_t t = 0; t < cw.pairs.size(); ++t) cw.pairs[t] = {flat[2 * t], flat[2 * t + 1]};
  return cw;
}

}  // namespace feclab
