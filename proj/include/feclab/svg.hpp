#pragma once

#include <string>
#include <utility>
#include <vector>

namespace feclab {

// Minimal self-contained SVG line plot for BER curves: linear x (SNR in dB),
// log10 y, one polyline per series. Points with non-positive BER cannot be
// drawn on a log axis and are skipped.
struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (snr_db, ber)
};

void write_ber_svg(const std::string& path, const std::string& title,
                   const std::vector<PlotSeries>& series);

}  // namespace feclab
