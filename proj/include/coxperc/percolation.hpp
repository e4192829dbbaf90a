#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "coxperc/cox.hpp"
#include "coxperc/geom.hpp"
#include "coxperc/tessellations.hpp"

namespace coxperc {

/// Disjoint sets with union by rank and path halving.
class UnionFind {
 public:
  explicit UnionFind(std::size_t n = 0);

  std::uint32_t Find(std::uint32_t i);
  /// Returns true when two different sets were merged.
  bool Unite(std::uint32_t a, std::uint32_t b);
  std::size_t size() const { return parent_.size(); }
  std::size_t components() const { return components_; }
  std::size_t unions() const { return unions_; }

 private:
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint8_t> rank_;
  std::size_t components_ = 0;
  std::size_t unions_ = 0;
};

/// Components of the graph joining points at distance < radius.
struct GilbertGraph {
  std::vector<Point> points;
  double radius = 0.0;
  /// Canonical component label (root index) per point.
  std::vector<std::uint32_t> label;
  std::size_t components = 0;
  std::size_t unions = 0;

  bool Connected(std::uint32_t i, std::uint32_t j) const { return label[i] == label[j]; }
  /// Indices of the component containing i, ascending.
  std::vector<std::uint32_t> ComponentOf(std::uint32_t i) const;
};

GilbertGraph BuildGilbert(std::span<const Point> points, double r);
inline GilbertGraph BuildGilbert(const PointPattern& pattern, double r) { return BuildGilbert(pattern.points, r); }

/// True iff the origin's component is not contained in Q_{a - 2r}, i.e.
/// some member has sup-norm >= (a - 2r) / 2. Requires the origin at index 0
/// and a > 4r.
bool OriginReachesBoundary(const GilbertGraph& graph, double a);

/// Smallest retention level at which the origin reaches the boundary when
/// point i (i >= 1) is kept iff marks[i] < level; the origin is always kept.
/// Returns a value > 1 when it never does. Points are added in mark order
/// with an incremental union-find.
double OriginReachThreshold(std::span<const Point> points, std::span<const double> marks, double r, double a);

/// Edge open flags of a bond configuration on a segment system.
struct BondConfig {
  std::vector<std::uint8_t> open;
};

/// Each edge open independently with probability b^{|e|}.
BondConfig SampleBonds(const SegmentSystem& sys, double b, std::uint64_t seed);

/// True iff the open cluster of `root` contains a vertex with sup-norm
/// (about `center`) >= level.
bool BondClusterEscapes(const SegmentSystem& sys, const std::vector<std::uint8_t>& open, std::uint32_t root,
                        Point center, double level);

/// Copy of `sys` with edge `edge` split at parameter t; returns the new
/// system and the index of the split vertex. The halves replace the edge
/// (first half keeps its index, second half is appended).
std::pair<SegmentSystem, std::uint32_t> SplitEdge(const SegmentSystem& sys, std::size_t edge, double t);

/// Vertex nearest to p.
std::uint32_t NearestVertex(const SegmentSystem& sys, Point p);

struct BondEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int replicates = 0;
  bool flagged = false;  // empty system
};

/// P(cluster of the vertex nearest the window centre escapes Q_{K - margin}).
BondEstimate BondPercolationTheta(const SegmentSystem& sys, double b, double K, int replicates,
                                  std::uint64_t seed, double margin = 0.0);

/// Gap-model open flags: edge e is open iff it carries at least one point and
/// every gap between consecutive points, and between each endpoint and its
/// nearest point, is < r. `params[e]` holds the point parameters on e.
std::vector<std::uint8_t> GapModelOpen(const SegmentSystem& sys, std::vector<std::vector<double>> params, double r);

/// Per-edge Cox points of rate lambda per unit length, as parameters.
std::vector<std::vector<double>> SampleEdgePoints(const SegmentSystem& sys, double lambda, std::uint64_t seed);

BondEstimate GapModelTheta(const SegmentSystem& sys, double lambda, double r, double K, int replicates,
                           std::uint64_t seed, double margin = 0.0);

/// Survival frequency of a single edge of the given length under the gap
/// rule.
BondEstimate EdgeSurvivalFrequency(double length, double lambda, double r, int replicates, std::uint64_t seed);

/// [(1 - e^{-lambda r})^{lambda l + lambda^{3/4}}, (1 - e^{-lambda r})^{lambda l - lambda^{3/4}}]
std::pair<double, double> GapBracket(double length, double lambda, double r);

}  // namespace coxperc
