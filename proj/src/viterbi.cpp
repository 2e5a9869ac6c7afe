#include "feclab/viterbi.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace feclab {

namespace {

inline uint8_t parity(uint32_t x) { return uint8_t(std::popcount(x) & 1); }

// squared Euclidean distance between a received pair and a BPSK-modulated
// output pair
inline double branch_metric(double r0, double r1, const std::array<uint8_t, 2>& out) {
  const double s0 = out[0] ? -1.0 : 1.0;
  const double s1 = out[1] ? -1.0 : 1.0;
  const double d0 = r0 - s0;
  const double d1 = r1 - s1;
  return d0 * d0 + d1 * d1;
}

}  // namespace

Trellis build_trellis(const CodeSpec& spec) {
  spec.validate();
  Trellis tr;
  tr.spec = spec;
  tr.num_states = spec.num_states();
  tr.next_state.resize(tr.num_states);
  tr.outputs.resize(tr.num_states);
  const int v = spec.memory;
  for (int s = 0; s < tr.num_states; ++s) {
    for (int u = 0; u < 2; ++u) {
      const uint32_t window = (uint32_t(u) << v) | uint32_t(s);
      tr.outputs[s][u] = {parity(window & spec.generators[0]),
                          parity(window & spec.generators[1])};
      tr.next_state[s][u] = (v == 0) ? 0 : int((uint32_t(u) << (v - 1)) | (uint32_t(s) >> 1));
    }
  }
  return tr;
}

DecodeResult viterbi_decode(const Trellis& trellis, const SymbolBlock& received) {
  if (received.size() % 2 != 0) throw std::invalid_argument("received length must be even");
  const int steps = static_cast<int>(received.size() / 2);
  const int v = trellis.spec.memory;
  const int info_len = steps - v;
  if (info_len < 1) throw std::invalid_argument("received block too short for this code");

  const int ns = trellis.num_states;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> pm_prev(ns, kInf), pm_curr(ns, kInf);
  pm_prev[0] = 0.0;  // terminated trellis starts in state 0

  // survivor[t][state] = (predecessor, input)
  std::vector<std::array<int16_t, 2>> survivor(size_t(steps) * ns, {-1, 0});

  for (int t = 0; t < steps; ++t) {
    const double r0 = received[2 * t];
    const double r1 = received[2 * t + 1];
    const int max_input = (t >= info_len) ? 1 : 2;  // tail steps admit only input 0
    std::fill(pm_curr.begin(), pm_curr.end(), kInf);
    // ascending predecessor order + strict improvement makes metric ties keep
    // the lower-numbered predecessor
    for (int s = 0; s < ns; ++s) {
      const double pm = pm_prev[s];
      if (pm == kInf) continue;
      for (int u = 0; u < max_input; ++u) {
        const double m = pm + branch_metric(r0, r1, trellis.outputs[s][u]);
        const int nxt = trellis.next_state[s][u];
        if (m < pm_curr[nxt]) {
          pm_curr[nxt] = m;
          survivor[size_t(t) * ns + nxt] = {int16_t(s), int16_t(u)};
        }
      }
    }
    pm_prev.swap(pm_curr);
  }

  DecodeResult res;
  res.path_metric = pm_prev[0];
  res.message.assign(info_len, 0);
  int state = 0;  // terminated trellis ends in state 0
  for (int t = steps - 1; t >= 0; --t) {
    const auto& sv = survivor[size_t(t) * ns + state];
    if (t < info_len) res.message[t] = uint8_t(sv[1]);
    state = sv[0];
  }
  return res;
}

Bits brute_force_ml(const CodeSpec& spec, const SymbolBlock& received) {
  spec.validate();
  if (received.size() % 2 != 0) throw std::invalid_argument("received length must be even");
  const int steps = static_cast<int>(received.size() / 2);
  const int info_len = steps - spec.memory;
  if (info_len < 1) throw std::invalid_argument("received block too short for this code");
  if (info_len > 20) throw std::invalid_argument("oracle limit");

  Bits best;
  double best_metric = std::numeric_limits<double>::infinity();
  Bits msg(info_len);
  // m enumerated with msg[0] as the most significant bit = lexicographic
  // order, so the first strict minimum is the lexicographically smallest tie
  for (uint32_t m = 0; m < (1u << info_len); ++m) {
    for (int k = 0; k < info_len; ++k) msg[k] = (m >> (info_len - 1 - k)) & 1;
    const SymbolBlock sym = modulate(interleave(encode(spec, msg)));
    double metric = 0.0;
    for (size_t i = 0; i < sym.size(); ++i) {
      const double d = received[i] - sym[i];
      metric += d * d;
    }
    if (metric < best_metric) {
      best_metric = metric;
      best = msg;
    }
  }
  return best;
}

}  // namespace feclab
