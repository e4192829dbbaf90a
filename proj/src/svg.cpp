#include "coxperc/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace coxperc {
namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string Tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string Escape(const std::string& s) {
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

}  // namespace

std::string CurvesSvg(const std::vector<CurveSeries>& series, const std::string& title, const std::string& x_label,
                      const std::string& y_label) {
  const double width = 720, height = 480, left = 70, right = 180, top = 40, bottom = 60;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (y0 >= 0.0 && y1 <= 1.0) y0 = 0.0, y1 = 1.0;
  if (x1 <= x0) x1 = x0 + 1.0;
  if (y1 <= y0) y1 = y0 + 1.0;
  const double pw = width - left - right, ph = height - top - bottom;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << Escape(title)
      << "</text>\n";
  out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double xv = x0 + (x1 - x0) * k / 5.0, yv = y0 + (y1 - y0) * k / 5.0;
    out << "<line x1=\"" << Num(px(xv)) << "\" y1=\"" << Num(top + ph) << "\" x2=\"" << Num(px(xv)) << "\" y2=\""
        << Num(top + ph + 5) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << Num(px(xv)) << "\" y=\"" << Num(top + ph + 18) << "\" text-anchor=\"middle\">" << Tick(xv)
        << "</text>\n";
    out << "<line x1=\"" << Num(left - 5) << "\" y1=\"" << Num(py(yv)) << "\" x2=\"" << Num(left) << "\" y2=\""
        << Num(py(yv)) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << Num(left - 8) << "\" y=\"" << Num(py(yv) + 4) << "\" text-anchor=\"end\">" << Tick(yv)
        << "</text>\n";
  }
  out << "<text x=\"" << Num(left + pw / 2) << "\" y=\"" << Num(height - 15) << "\" text-anchor=\"middle\">"
      << Escape(x_label) << "</text>\n";
  out << "<text x=\"18\" y=\"" << Num(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << Num(top + ph / 2) << ")\">" << Escape(y_label) << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) out << Num(px(s.x[i])) << "," << Num(py(s.y[i])) << " ";
    out << "\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      out << "<circle cx=\"" << Num(px(s.x[i])) << "\" cy=\"" << Num(py(s.y[i])) << "\" r=\"2.5\" fill=\"" << color
          << "\"/>\n";
      if (i < s.se.size() && s.se[i] > 0.0) {
        out << "<line x1=\"" << Num(px(s.x[i])) << "\" y1=\"" << Num(py(s.y[i] - s.se[i])) << "\" x2=\""
            << Num(px(s.x[i])) << "\" y2=\"" << Num(py(s.y[i] + s.se[i])) << "\" stroke=\"" << color << "\"/>\n";
      }
    }
    const double ly = top + 10 + 18.0 * static_cast<double>(k);
    out << "<line x1=\"" << Num(width - right + 15) << "\" y1=\"" << Num(ly) << "\" x2=\"" << Num(width - right + 35)
        << "\" y2=\"" << Num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << Num(width - right + 40) << "\" y=\"" << Num(ly + 4) << "\">" << Escape(s.label)
        << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string SnapshotSvg(const MeasureRealization& real, const PointPattern& points) {
  const BoxWindow& w = real.window;
  const double size = 640;
  const double scale = size / w.side;
  auto sx = [&](double x) { return (x - w.lo(0)) * scale; };
  auto sy = [&](double y) { return (w.hi(1) - y) * scale; };
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (real.segments) {
    for (const auto& e : real.segments->edges) {
      out << "<line x1=\"" << Num(sx(e.seg.a.x)) << "\" y1=\"" << Num(sy(e.seg.a.y)) << "\" x2=\"" << Num(sx(e.seg.b.x))
          << "\" y2=\"" << Num(sy(e.seg.b.y)) << "\" stroke=\"#555\" stroke-width=\"1\"/>\n";
    }
  } else if (real.density) {
    // Shade a coarse raster of the field (planar slice z = 0).
    constexpr int kCells = 128;
    const double step = w.side / kCells;
    std::vector<double> v(kCells * kCells);
    double vmax = 0.0;
    for (int j = 0; j < kCells; ++j) {
      for (int i = 0; i < kCells; ++i) {
        Point p{w.lo(0) + (i + 0.5) * step, w.lo(1) + (j + 0.5) * step, w.dim == 3 ? w.center.z : 0.0};
        v[j * kCells + i] = real.FieldAt(p);
        vmax = std::max(vmax, v[j * kCells + i]);
      }
    }
    for (int j = 0; j < kCells; ++j) {
      for (int i = 0; i < kCells; ++i) {
        const double t = vmax > 0.0 ? v[j * kCells + i] / vmax : 0.0;
        if (t <= 0.0) continue;
        const int g = static_cast<int>(std::lround(235.0 - 160.0 * t));
        out << "<rect x=\"" << Num(i * step * scale) << "\" y=\"" << Num(size - (j + 1) * step * scale)
            << "\" width=\"" << Num(step * scale + 0.5) << "\" height=\"" << Num(step * scale + 0.5) << "\" fill=\"rgb("
            << g << "," << g << "," << g << ")\"/>\n";
      }
    }
  }
  for (const Point& p : points.points) {
    out << "<circle cx=\"" << Num(sx(p.x)) << "\" cy=\"" << Num(sy(p.y)) << "\" r=\"1.6\" fill=\"#d62728\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace coxperc
