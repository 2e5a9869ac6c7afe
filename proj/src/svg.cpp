#include "feclab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace feclab {

namespace {

constexpr int kWidth = 640, kHeight = 480;
constexpr int kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

}  // namespace

void write_ber_svg(const std::string& path, const std::string& title,
                   const std::vector<PlotSeries>& series) {
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      if (y > 0.0) {
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
      }
    }
  if (xmin > xmax) throw std::runtime_error("svg: no plottable points");
  if (ymin > ymax) {
    ymin = 1e-6;
    ymax = 1.0;
  }
  if (xmax == xmin) xmax = xmin + 1.0;
  // round the y range out to whole decades
  double lo = std::floor(std::log10(ymin));
  double hi = std::ceil(std::log10(ymax));
  if (hi <= lo) hi = lo + 1.0;

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * plot_w; };
  auto py = [&](double y) { return kTop + (hi - std::log10(y)) / (hi - lo) * plot_h; };

  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
     << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"15\">"
     << title << "</text>\n";

  // axes box
  os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w << "\" height=\""
     << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n";

  // y decade gridlines and labels
  for (double d = lo; d <= hi + 0.5; d += 1.0) {
    const double y = py(std::pow(10.0, d));
    os << "<line x1=\"" << kLeft << "\" y1=\"" << y << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
       << y << "\" stroke=\"#dddddd\"/>\n";
    os << "<text x=\"" << kLeft - 8 << "\" y=\"" << y + 4
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">1e" << int(d)
       << "</text>\n";
  }
  // x ticks at integer SNRs
  const double xstep = (xmax - xmin) <= 16 ? 2.0 : std::ceil((xmax - xmin) / 8.0);
  for (double x = std::ceil(xmin); x <= xmax + 1e-9; x += xstep) {
    os << "<line x1=\"" << px(x) << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << px(x)
       << "\" y2=\"" << kTop + plot_h + 5 << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << px(x) << "\" y=\"" << kTop + plot_h + 18
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << x
       << "</text>\n";
  }
  os << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 12
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">Eb/N0 [dB]</text>\n";
  os << "<text x=\"16\" y=\"" << kTop + plot_h / 2
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 "
        "16 "
     << kTop + plot_h / 2 << ")\">BER</text>\n";

  int ci = 0;
  for (const auto& s : series) {
    const char* color = kColors[ci % 6];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : s.points) {
      if (y <= 0.0) continue;  // log axis: zero-BER points are omitted
      os << px(x) << "," << py(y) << " ";
    }
    os << "\"/>\n";
    for (const auto& [x, y] : s.points) {
      if (y <= 0.0) continue;
      os << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"2.5\" fill=\"" << color
         << "\"/>\n";
    }
    os << "<text x=\"" << kLeft + plot_w - 8 << "\" y=\"" << kTop + 16 + 16 * ci
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << color
       << "\">" << s.label << "</text>\n";
    ++ci;
  }
  os << "</svg>\n";
  if (!os) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace feclab
