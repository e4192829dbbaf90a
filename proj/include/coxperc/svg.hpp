#pragma once

#include <string>
#include <vector>

#include "coxperc/cox.hpp"
#include "coxperc/measures.hpp"

namespace coxperc {

struct CurveSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> se;  // optional error bars, same length as y
};

/// Line chart with +-1 SE bars; y axis fixed to [0, 1] when all values lie
/// there.
std::string CurvesSvg(const std::vector<CurveSeries>& series, const std::string& title, const std::string& x_label,
                      const std::string& y_label);

/// Measure realization (segments, or density shading) with points on top.
std::string SnapshotSvg(const MeasureRealization& real, const PointPattern& points);

}  // namespace coxperc
