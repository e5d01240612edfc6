#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "crrix/matrix.hpp"

namespace crrix::svg {

// Minimal SVG emitters for quick-look plots.

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct LineSeries {
  std::string name;
  std::vector<std::optional<double>> y;  ///< gaps break the polyline
  std::string color = "#1f77b4";
};

/// Line chart over a shared x axis given by `labels` (first/last label printed).
inline std::string line_chart(const std::string& title, const std::vector<std::string>& labels,
                              const std::vector<LineSeries>& series, int width = 800, int height = 400) {
  const double left = 60;
  const double right = 20;
  const double top = 40;
  const double bottom = 40;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : series)
    for (const auto& v : s.y)
      if (v) {
        lo = std::min(lo, *v);
        hi = std::max(hi, *v);
      }
  if (!std::isfinite(lo)) {
    lo = 0.0;
    hi = 1.0;
  }
  if (hi == lo) hi = lo + 1.0;
  const std::size_t n = labels.size();
  auto px = [&](std::size_t i) { return left + (n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.5) * (width - left - right); };
  auto py = [&](double v) { return top + (1.0 - (v - lo) / (hi - lo)) * (height - top - bottom); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
    << escape(title) << "</text>\n";
  o << "<line x1=\"" << left << "\" y1=\"" << height - bottom << "\" x2=\"" << width - right << "\" y2=\"" << height - bottom
    << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << height - bottom << "\" stroke=\"black\"/>\n";
  o << "<text x=\"" << left - 4 << "\" y=\"" << num(py(hi)) << "\" text-anchor=\"end\" font-size=\"10\">" << num(hi) << "</text>\n";
  o << "<text x=\"" << left - 4 << "\" y=\"" << num(py(lo)) << "\" text-anchor=\"end\" font-size=\"10\">" << num(lo) << "</text>\n";
  if (n) {
    o << "<text x=\"" << left << "\" y=\"" << height - bottom + 14 << "\" font-size=\"10\">" << escape(labels.front()) << "</text>\n";
    o << "<text x=\"" << width - right << "\" y=\"" << height - bottom + 14 << "\" text-anchor=\"end\" font-size=\"10\">"
      << escape(labels.back()) << "</text>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    std::string pts;
    auto flush = [&] {
      if (!pts.empty()) o << "<polyline fill=\"none\" stroke=\"" << series[s].color << "\" points=\"" << pts << "\"/>\n";
      pts.clear();
    };
    for (std::size_t i = 0; i < series[s].y.size() && i < n; ++i) {
      if (!series[s].y[i]) {
        flush();
        continue;
      }
      pts += num(px(i)) + "," + num(py(*series[s].y[i])) + " ";
    }
    flush();
    o << "<text x=\"" << left + 8 << "\" y=\"" << top + 14 * (s + 1) << "\" font-size=\"11\" fill=\"" << series[s].color << "\">"
      << escape(series[s].name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

/// Heatmap of a matrix with values in [0, 1]: 0 blue, 1 red.
inline std::string heatmap(const std::string& title, const Matrix& m, int cell = 28) {
  const int pad = 40;
  const int width = pad + cell * static_cast<int>(m.cols()) + 10;
  const int height = pad + cell * static_cast<int>(m.rows()) + 10;
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
    << escape(title) << "</text>\n";
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      const double v = std::clamp(m(r, c), 0.0, 1.0);
      const int red = static_cast<int>(std::lround(255 * v));
      const int blue = 255 - red;
      o << "<rect x=\"" << pad + cell * static_cast<int>(c) << "\" y=\"" << pad + cell * static_cast<int>(r) << "\" width=\"" << cell
        << "\" height=\"" << cell << "\" fill=\"rgb(" << red << ",64," << blue << ")\"><title>" << num(m(r, c)) << "</title></rect>\n";
    }
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace crrix::svg
