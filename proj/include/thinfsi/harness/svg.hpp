#ifndef THINFSI_HARNESS_SVG_HPP
#define THINFSI_HARNESS_SVG_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace thinfsi {

/// Minimal log-log plot writer: axes with decade ticks, one polyline per
/// series, legend text. No external plotting dependency.
class LogLogPlot {
 public:
  struct Series {
    std::string label;
    std::string color = "#1f76b4";
    std::vector<std::pair<double, double>> points;  // (x, y), both > 0
  };

  LogLogPlot(std::string title, std::string xlabel, std::string ylabel)
      : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)) {}

  void add_series(Series s) { series_.push_back(std::move(s)); }

  void write(const std::string& path) const {
    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    for (const auto& s : series_)
      for (const auto& [x, y] : s.points) {
        if (!(x > 0.0) || !(y > 0.0)) continue;
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
      }
    if (!(xmin < xmax)) {
      xmin = xmin < INFINITY ? xmin / 2 : 0.1;
      xmax = 2 * xmin + 1;
    }
    if (!(ymin < ymax)) {
      ymin = ymin < INFINITY ? ymin / 2 : 0.1;
      ymax = 2 * ymin + 1;
    }
    const double lx0 = std::floor(std::log10(xmin)), lx1 = std::ceil(std::log10(xmax));
    const double ly0 = std::floor(std::log10(ymin)), ly1 = std::ceil(std::log10(ymax));

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write svg: " + path);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H
        << "' viewBox='0 0 " << W << " " << H << "'>\n";
    out << "<rect width='100%' height='100%' fill='white'/>\n";
    out << "<text x='" << W / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title_
        << "</text>\n";

    auto px = [&](double x) {
      return ML + (std::log10(x) - lx0) / (lx1 - lx0) * (W - ML - MR);
    };
    auto py = [&](double y) {
      return H - MB - (std::log10(y) - ly0) / (ly1 - ly0) * (H - MT - MB);
    };

    // frame
    out << "<rect x='" << ML << "' y='" << MT << "' width='" << (W - ML - MR) << "' height='"
        << (H - MT - MB) << "' fill='none' stroke='black'/>\n";
    // decade ticks
    for (int e = static_cast<int>(lx0); e <= static_cast<int>(lx1); ++e) {
      const double x = px(std::pow(10.0, e));
      out << "<line x1='" << x << "' y1='" << (H - MB) << "' x2='" << x << "' y2='"
          << (H - MB + 6) << "' stroke='black'/>\n";
      out << "<text x='" << x << "' y='" << (H - MB + 20)
          << "' text-anchor='middle' font-size='11'>1e" << e << "</text>\n";
    }
    for (int e = static_cast<int>(ly0); e <= static_cast<int>(ly1); ++e) {
      const double y = py(std::pow(10.0, e));
      out << "<line x1='" << (ML - 6) << "' y1='" << y << "' x2='" << ML << "' y2='" << y
          << "' stroke='black'/>\n";
      out << "<text x='" << (ML - 10) << "' y='" << (y + 4)
          << "' text-anchor='end' font-size='11'>1e" << e << "</text>\n";
    }
    out << "<text x='" << (W / 2) << "' y='" << (H - 8) << "' text-anchor='middle' font-size='12'>"
        << xlabel_ << "</text>\n";
    out << "<text x='14' y='" << (H / 2) << "' text-anchor='middle' font-size='12' transform='rotate(-90 14 "
        << (H / 2) << ")'>" << ylabel_ << "</text>\n";

    int legend_y = MT + 16;
    for (const auto& s : series_) {
      std::string pts;
      for (const auto& [x, y] : s.points) {
        if (!(x > 0.0) || !(y > 0.0)) continue;
        pts += std::to_string(px(x)) + "," + std::to_string(py(y)) + " ";
      }
      out << "<polyline points='" << pts << "' fill='none' stroke='" << s.color
          << "' stroke-width='1.5'/>\n";
      for (const auto& [x, y] : s.points) {
        if (!(x > 0.0) || !(y > 0.0)) continue;
        out << "<circle cx='" << px(x) << "' cy='" << py(y) << "' r='3' fill='" << s.color
            << "'/>\n";
      }
      out << "<text x='" << (W - MR - 8) << "' y='" << legend_y
          << "' text-anchor='end' font-size='11' fill='" << s.color << "'>" << s.label
          << "</text>\n";
      legend_y += 16;
    }
    out << "</svg>\n";
  }

 private:
  static constexpr int W = 640, H = 480, ML = 70, MR = 20, MT = 40, MB = 50;
  std::string title_, xlabel_, ylabel_;
  std::vector<Series> series_;
};

}  // namespace thinfsi

#endif
