#include "feclab/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace feclab {

SymbolBlock modulate(const Bits& bits) {
  SymbolBlock symbols;
  symbols.reserve(bits.size());
  for (uint8_t b : bits) {
    if (b > 1) throw std::invalid_argument("modulate: bits must be 0 or 1");
    symbols.push_back(b ? -1.0 : 1.0);
  }
  return symbols;
}

double noise_sigma(double eb_n0_db, double rate) {
  if (!(rate > 0.0) || rate > 1.0) throw std::invalid_argument("rate must be in (0,1]");
  return std::sqrt(1.0 / (2.0 * rate * std::pow(10.0, eb_n0_db / 10.0)));
}

SymbolBlock add_awgn(const SymbolBlock& block, double sigma, Rng& rng) {
  if (sigma < 0.0) throw std::invalid_argument("sigma must be non-negative");
  SymbolBlock out(block.size());
  for (size_t i = 0; i < block.size(); ++i) out[i] = block[i] + sigma * rng.next_gaussian();
  return out;
}

Bits hard_decide(const SymbolBlock& symbols) {
  Bits bits(symbols.size());
  for (size_t i = 0; i < symbols.size(); ++i) bits[i] = symbols[i] < 0.0 ? 1 : 0;
  return bits;
}

}  // namespace feclab
