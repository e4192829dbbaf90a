#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "coxperc/geom.hpp"
#include "coxperc/tessellations.hpp"

namespace coxperc {

// Measure families. All intensities are >= 0.

/// Density sum_i k(x - X_i), k = kernel_height on the ball of kernel_radius,
/// X a Poisson process of center_intensity.
struct ShotNoise {
  double kernel_radius = 1.0;
  double kernel_height = 1.0;
  double center_intensity = 1.0;

  friend bool operator==(const ShotNoise&, const ShotNoise&) = default;
};

/// Density `inside` on a Boolean union of balls (radius grain_radius,
/// germs of grain_intensity) and `outside` off it.
struct ModulatedBoolean {
  double grain_radius = 1.0;
  double grain_intensity = 1.0;
  double inside = 1.0;
  double outside = 0.0;

  friend bool operator==(const ModulatedBoolean&, const ModulatedBoolean&) = default;
};

struct VoronoiEdges {
  double seed_intensity = 1.0;

  friend bool operator==(const VoronoiEdges&, const VoronoiEdges&) = default;
};

struct DelaunayEdges {
  double seed_intensity = 1.0;

  friend bool operator==(const DelaunayEdges&, const DelaunayEdges&) = default;
};

/// Isotropic Poisson line process; line_intensity is the length per unit
/// area.
struct PoissonLines {
  double line_intensity = 1.0;

  friend bool operator==(const PoissonLines&, const PoissonLines&) = default;
};

struct ConstantLebesgue {
  double density = 1.0;

  friend bool operator==(const ConstantLebesgue&, const ConstantLebesgue&) = default;
};

using MeasureFamily =
    std::variant<ShotNoise, ModulatedBoolean, VoronoiEdges, DelaunayEdges, PoissonLines, ConstantLebesgue>;

struct MeasureSpec {
  MeasureFamily family = ConstantLebesgue{};
  /// Scalar multiplier applied to the raw measure.
  double normalization = 1.0;
  int dim = 2;

  /// Short name: shot_noise, boolean, voronoi, delaunay, lines, constant.
  std::string Kind() const;
  bool IsSingular() const;
  /// Throws kParameter on negative intensities or a bad dimension.
  void Validate() const;
  /// Stable hash of the family parameters and dimension (normalization
  /// excluded), used to key calibration constants.
  std::uint64_t FamilyHash() const;
  /// Seed margin for tessellations, or kernel/grain radius for AC families.
  double DefaultMargin() const;
  /// Grid pitch for density representations.
  double DefaultPitch() const;

  friend bool operator==(const MeasureSpec&, const MeasureSpec&) = default;
};

/// E[Lambda(Q_1)] of the raw (normalization 1) family when known in closed
/// form: exact for AC families, classical length intensities for the planar
/// tessellations (2 sqrt(l), 32/(3 pi) sqrt(l), line intensity).
std::optional<double> AnalyticMeanMass(const MeasureSpec& spec);

/// Copy of `spec` with normalization = target / raw_mean.
MeasureSpec WithTargetMass(MeasureSpec spec, double target, double raw_mean);

/// Piecewise-constant density on cells of an absolute lattice pitch * Z^d.
struct DensityGrid {
  double pitch = 1.0;
  int dim = 2;
  std::array<std::int64_t, 3> first_cell{};
  std::array<std::int64_t, 3> count{1, 1, 1};
  std::vector<double> values;
  /// Set for spatially constant densities; `values` is then empty.
  std::optional<double> uniform;

  double At(Point p) const;
  BoxWindow CellBox(const std::array<std::int64_t, 3>& cell) const;
  std::size_t Flat(const std::array<std::int64_t, 3>& cell) const;
};

/// Sampled environment restricted to a window.
struct MeasureRealization {
  MeasureSpec spec;
  BoxWindow window;
  std::uint64_t seed = 0;
  double margin = 0.0;

  /// Exactly one of the two representations is populated.
  std::optional<DensityGrid> density;
  std::optional<SegmentSystem> segments;
  /// Mass per unit length for segment measures.
  double segment_weight = 1.0;
  /// Shot-noise centres or Boolean germs (dilated window), for exact
  /// per-source Cox sampling and exact field values.
  std::vector<Point> sources;

  bool IsZero() const;
  /// Exact field value at p for AC families (from sources, not the grid).
  double FieldAt(Point p) const;
};

MeasureRealization SampleMeasure(const MeasureSpec& spec, const BoxWindow& window, std::uint64_t seed);

/// Lambda(box). Throws kOutOfWindow if box is not inside the window.
double MeasureOfBox(const MeasureRealization& real, const BoxWindow& box);

/// Lambda(B(center, radius)); density cells are included by their centres.
double MeasureOfBall(const MeasureRealization& real, Point center, double radius);

/// Size-biased location draw from Lambda restricted to `unit_box`.
struct PalmDraw {
  std::optional<Point> shift;
  double weight = 0.0;
  /// For segment measures: edge index and parameter in [0, 1] of the shift.
  std::optional<std::size_t> edge;
  double edge_param = 0.0;
};
PalmDraw DrawPalm(const MeasureRealization& real, const BoxWindow& unit_box, std::uint64_t seed);

/// Supremum of the stabilization radii over a pitch n/64 lattice of
/// test points in `window`.
double StabilizationRadiusSup(const MeasureSpec& spec, const BoxWindow& window, std::uint64_t seed);

/// Nearest-seed sup over the same lattice for given seeds; +inf if none.
/// `cell` is the grid cell size used for the nearest-seed search.
double StabilizationRadiusSupForSeeds(std::span<const Point> seeds, const BoxWindow& window, double cell);

struct StabDiagnostics {
  double n = 0.0;
  double empirical_prob = 0.0;  // P(sup R < n)
  double std_error = 0.0;
  double theory_bound = 0.0;    // lower bound on P(sup R < n), when known
  int replicates = 0;
};
StabDiagnostics DiagnoseStabilization(const MeasureSpec& spec, double n, int replicates, std::uint64_t seed);

struct AecResult {
  bool support_nonempty = false;
  bool q_n_support_connected_in_q_2n = false;
};
/// Support discretized at pitch n/128 with 8-connectivity in 2d; pitch n/32
/// with 26-connectivity in 3d.
AecResult AecCheck(const MeasureRealization& real, double n);

/// Monte Carlo estimate of the raw mean mass per unit volume.
struct MassCalibration {
  double mean = 0.0;
  double std_error = 0.0;
  int replicates = 0;
  std::optional<double> analytic;
};
MassCalibration CalibrateMeanMass(const MeasureSpec& spec, int replicates, std::uint64_t seed,
                                  double window_side = 10.0);

}  // namespace coxperc
