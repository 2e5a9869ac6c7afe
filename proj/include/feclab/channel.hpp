#pragma once

#include <vector>

#include "feclab/coding.hpp"
#include "feclab/rng.hpp"

namespace feclab {

using SymbolBlock = std::vector<double>;

// BPSK, unit energy: bit 0 -> +1.0, bit 1 -> -1.0. Larger received value
// means "more like bit 0", matching the Viterbi branch-metric convention.
SymbolBlock modulate(const Bits& bits);

// Noise standard deviation for a given Eb/N0 in dB. SNR throughout this
// project is energy per *information* bit over N0, so the code rate enters:
//   sigma = sqrt(1 / (2 * rate * 10^(eb_n0_db/10)))
// With rate 1/2 at 0 dB this gives sigma = 1.0.
double noise_sigma(double eb_n0_db, double rate);

SymbolBlock add_awgn(const SymbolBlock& block, double sigma, Rng& rng);

// Hard decision at threshold 0; an exact 0 decodes to bit 0.
Bits hard_decide(const SymbolBlock& symbols);

}  // namespace feclab
