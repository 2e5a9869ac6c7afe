#include "feclab/losses.hpp"

namespace feclab {

BerReport ber(const std::vector<double>& p, const Bits& u) {
  if (p.size() != u.size() || p.empty())
    throw std::invalid_argument("ber: length mismatch or empty");
  BerReport r;
  r.bits_counted = static_cast<int64_t>(p.size());
  for (size_t k = 0; k < p.size(); ++k) {
    const uint8_t hard = p[k] > 0.5 ? 1 : 0;
    if (hard != u[k]) ++r.bit_errors;
  }
  r.ber = double(r.bit_errors) / double(r.bits_counted);
  return r;
}

double nve_rows(const std::vector<double>& ber_decoder, const std::vector<double>& ber_viterbi,
                const std::vector<int64_t>& bits_per_point) {
  const size_t s = ber_decoder.size();
  if (s == 0 || ber_viterbi.size() != s || bits_per_point.size() != s)
    throw std::invalid_argument("nve: need equal, non-empty SNR point lists");
  double sum = 0.0;
  for (size_t i = 0; i < s; ++i) {
    if (ber_decoder[i] < 0.0 || ber_viterbi[i] < 0.0)
      throw std::invalid_argument("nve: negative BER");
    if (bits_per_point[i] < 1) throw std::invalid_argument("nve: bits_per_point must be >= 1");
    const double denom =
        ber_viterbi[i] > 0.0 ? ber_viterbi[i] : 1.0 / double(bits_per_point[i]);
    sum += ber_decoder[i] / denom;
  }
  return sum / double(s);
}

double nve(const std::vector<double>& ber_decoder, const std::vector<double>& ber_viterbi,
           int64_t bits_per_point) {
  return nve_rows(ber_decoder, ber_viterbi,
                  std::vector<int64_t>(ber_decoder.size(), bits_per_point));
}

}  // namespace feclab
