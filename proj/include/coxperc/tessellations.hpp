#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "coxperc/geom.hpp"

namespace coxperc {

/// Planar graph of straight segments; carries the 1-dimensional Hausdorff
/// measure of its edges.
struct SegmentSystem {
  struct Edge {
    std::uint32_t u = 0;
    std::uint32_t v = 0;
    Segment seg;
  };

  std::vector<Point> vertices;
  std::vector<Edge> edges;
  BoxWindow window;
  double total_length = 0.0;

  /// Adds an edge between existing vertices; zero-length edges are dropped.
  void AddEdge(std::uint32_t u, std::uint32_t v);
  std::uint32_t AddVertex(Point p);

  SegmentSystem Translated(Vec shift) const;
};

/// Writes one edge per row: x1,y1,x2,y2,length.
void WriteSegmentsCsv(const SegmentSystem& sys, std::ostream& out);

/// Orientation of (a, b, c): > 0 counter-clockwise, < 0 clockwise, 0
/// collinear. Exact sign (filtered, with exact rational fallback).
int Orient2d(Point a, Point b, Point c);

/// > 0 if d lies strictly inside the circumcircle of counter-clockwise
/// (a, b, c), < 0 outside, 0 cocircular. Exact sign.
int InCircle(Point a, Point b, Point c, Point d);

/// Delaunay triangulation by incremental insertion with a symbolic vertex at
/// infinity. Duplicate points are skipped.
class DelaunayTriangulation {
 public:
  static constexpr std::uint32_t kInfinite = 0xFFFFFFFFu;

  explicit DelaunayTriangulation(std::span<const Point> points);

  /// Finite triangles, counter-clockwise vertex indices.
  std::vector<std::array<std::uint32_t, 3>> Triangles() const;
  /// Undirected finite edges (u < v), sorted.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> Edges() const;

  /// For every finite edge: the vertex pair plus the indices of the
  /// triangles on each side (a triangle index may be an infinite one).
  struct DualEdge {
    std::uint32_t u;
    std::uint32_t v;
    std::uint32_t left;   // triangle containing (u, v) counter-clockwise
    std::uint32_t right;  // triangle containing (v, u) counter-clockwise
  };
  std::vector<DualEdge> DualEdges() const;

  bool IsInfinite(std::uint32_t tri) const;
  const std::array<std::uint32_t, 3>& Vertices(std::uint32_t tri) const { return tris_[tri].v; }
  std::span<const Point> points() const { return points_; }
  /// Upper bound on triangle indices (dead slots included).
  std::size_t TriangleSlots() const { return tris_.size(); }
  std::size_t skipped_duplicates() const { return skipped_; }

 private:
  struct Tri {
    std::array<std::uint32_t, 3> v;   // CCW; infinite vertex allowed
    std::array<std::uint32_t, 3> nb;  // nb[k] is opposite v[k]
    bool alive = true;
  };

  void Insert(std::uint32_t p);
  std::uint32_t Locate(std::uint32_t p, std::uint32_t start) const;
  bool InConflict(std::uint32_t tri, std::uint32_t p) const;

  std::span<const Point> points_;
  std::vector<Tri> tris_;
  std::uint32_t last_ = 0;
  std::size_t skipped_ = 0;
};

/// 1-facets of the Voronoi diagram of the seeds, clipped to `window`.
SegmentSystem VoronoiSegments(std::span<const Point> seeds, const BoxWindow& window);

/// Delaunay edges of the seeds, clipped to `window`.
SegmentSystem DelaunaySegments(std::span<const Point> seeds, const BoxWindow& window);

/// Lines given as (angle in [0, pi), signed distance from the window
/// centre), split at their mutual intersections and clipped to `window`.
struct Line {
  double angle = 0.0;
  double offset = 0.0;
};
SegmentSystem LineSegments(std::span<const Line> lines, const BoxWindow& window);

/// Poisson line process hitting the window's circumscribed disc of radius
/// R: Poisson(line_intensity * 2R) lines with uniform angle and offset.
/// `line_intensity` equals the length per unit area.
SegmentSystem LineTessellation(double line_intensity, const BoxWindow& window, std::uint64_t seed);

/// Homogeneous Poisson seeds of the given intensity in `window`.
std::vector<Point> PoissonSeeds(double intensity, const BoxWindow& window, std::uint64_t seed);

}  // namespace coxperc
