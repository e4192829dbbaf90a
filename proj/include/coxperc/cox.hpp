#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "coxperc/geom.hpp"
#include "coxperc/measures.hpp"

namespace coxperc {

struct PointPattern {
  std::vector<Point> points;
  BoxWindow window;
  double intensity = 0.0;
  std::uint64_t seed = 0;
  /// For Cox points on segment measures: source edge and parameter on it.
  /// Empty for other patterns.
  std::vector<std::uint32_t> edge;
  std::vector<double> edge_param;

  std::size_t size() const { return points.size(); }
};

/// Palm pattern: point 0 is the origin, the environment is shifted so that
/// the Palm location sits at the origin.
struct PalmSample {
  PointPattern pattern;
  double weight = 0.0;
  Vec shift;
  /// Environment in original coordinates and the size-biased draw.
  MeasureRealization environment;
  PalmDraw draw;
};

/// Homogeneous Poisson pattern of intensity rho in `window`.
PointPattern SamplePoisson(double rho, const BoxWindow& window, std::uint64_t seed);

/// Cox pattern of intensity measure lambda * Lambda restricted to `region`
/// (default: the realization window). Each edge or source draws from its own
/// substream, so the result does not depend on iteration order.
PointPattern SampleCox(const MeasureRealization& real, double lambda, std::uint64_t seed,
                       std::optional<BoxWindow> region = std::nullopt);

/// Environment for a Palm sample whose pattern covers Q_side(o) after the
/// shift: measure window Q_{side + 1}, draw from Q_1.
struct PalmEnvironment {
  MeasureRealization real;
  PalmDraw draw;
};
PalmEnvironment SamplePalmEnvironment(const MeasureSpec& spec, double side, std::uint64_t seed);

/// {o} together with Cox(lambda * shifted Lambda) in Q_side(o). Weight 0
/// replicates contain only the origin.
PalmSample SampleCoxPalm(const PalmEnvironment& env, double lambda, double side, std::uint64_t seed);
PalmSample SampleCoxPalm(const MeasureSpec& spec, double lambda, double side, std::uint64_t seed);

/// Retention mark in [0, 1) of point `index` for thinning stream `seed`.
double ThinningMark(std::uint64_t seed, std::size_t index);

/// Keeps point i iff ThinningMark(seed, i) < target / pattern.intensity.
PointPattern ThinTo(const PointPattern& pattern, double target, std::uint64_t seed);

/// As ThinTo, but point 0 (the origin) is always kept.
PointPattern ThinPalm(const PointPattern& pattern, double target, std::uint64_t seed);

}  // namespace coxperc
