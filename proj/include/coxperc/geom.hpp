#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "coxperc/error.hpp"

namespace coxperc {

/// Point or vector in R^2 or R^3. Planar data keeps z == 0; the run-level
/// dimension lives on the window, not on the point.
struct Vec {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  double& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }

  friend Vec operator+(Vec a, Vec b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec operator-(Vec a, Vec b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec operator*(double s, Vec a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(const Vec&, const Vec&) = default;
};

using Point = Vec;

inline double Dot(Vec a, Vec b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double Norm2(Vec a) { return Dot(a, a); }
inline double Norm(Vec a) { return std::sqrt(Norm2(a)); }
inline double Distance(Vec a, Vec b) { return Norm(a - b); }
inline double SupNorm(Vec a) {
  return std::max({std::abs(a.x), std::abs(a.y), std::abs(a.z)});
}
inline bool IsFinite(Vec a) {
  return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

/// Volume of the d-dimensional ball of the given radius (d in {2, 3}).
double BallVolume(int dim, double radius);

/// Axis-aligned cube `center + [-side/2, side/2]^dim`.
struct BoxWindow {
  Point center;
  double side = 1.0;
  int dim = 2;

  BoxWindow() = default;
  BoxWindow(Point c, double s, int d = 2);

  /// Cube of side `side` centred at the origin.
  static BoxWindow Centered(double side, int dim = 2) { return BoxWindow({}, side, dim); }

  double half() const { return 0.5 * side; }
  double lo(int axis) const { return center[axis] - half(); }
  double hi(int axis) const { return center[axis] + half(); }
  double volume() const { return std::pow(side, dim); }

  bool Contains(Point p) const;
  /// Contains `other` up to a relative slack of 1e-12 on each face.
  bool ContainsBox(const BoxWindow& other) const;
  BoxWindow Dilated(double margin) const { return BoxWindow(center, side + 2.0 * margin, dim); }
  BoxWindow Translated(Vec shift) const { return BoxWindow(center + shift, side, dim); }
};

struct Segment {
  Point a;
  Point b;
  double length = 0.0;

  Segment() = default;
  Segment(Point a_in, Point b_in) : a(a_in), b(b_in), length(Distance(a_in, b_in)) {}

  Point At(double t) const { return a + t * (b - a); }
};

/// Parameter interval [t0, t1] of the part of `seg` inside `box`
/// (Liang-Barsky); nullopt when the intersection is empty or a single point.
std::optional<std::pair<double, double>> ClipToBox(const Segment& seg, const BoxWindow& box);

/// Length of `seg` inside `box`.
double ClippedLength(const Segment& seg, const BoxWindow& box);

/// Length of `seg` inside the closed ball B(center, radius).
double ClippedLengthInBall(const Segment& seg, Point center, double radius);

/// Volume of the intersection of two axis-aligned boxes.
double OverlapVolume(const BoxWindow& a, const BoxWindow& b);

/// Bucketed fixed-radius neighbour index. Immutable after construction, so
/// concurrent queries are safe.
class GridIndex {
 public:
  GridIndex(std::span<const Point> points, double cell_size, int dim = 2);

  double cell_size() const { return cell_size_; }
  int dim() const { return dim_; }
  std::size_t size() const { return points_.size(); }
  std::size_t bucket_count() const { return bucket_count_; }

  /// Integer cell coordinate of a point.
  std::array<std::int64_t, 3> CellOf(Point p) const;

  /// Indices stored in the bucket at an integer cell coordinate, in
  /// insertion order.
  std::span<const std::uint32_t> Bucket(const std::array<std::int64_t, 3>& cell) const;

  /// Indices q with |p - q| < r, ascending.
  std::vector<std::uint32_t> NeighborsWithin(Point p, double r) const;

  /// Index of a stored point nearest to p (ties: first found); nullopt when
  /// the index is empty.
  std::optional<std::uint32_t> Nearest(Point p) const;

  /// Number of buckets a query at radius r inspects.
  int BucketsTouched(double r) const;

  /// Calls fn(j) for every stored j with |p - q_j| < r. Order is bucket order.
  template <typename Fn>
  void ForEachWithin(Point p, double r, Fn&& fn) const {
    const double r2 = r * r;
    const auto c = CellOf(p);
    const std::int64_t reach = Reach(r);
    const std::int64_t zr = dim_ == 3 ? reach : 0;
    for (std::int64_t dz = -zr; dz <= zr; ++dz) {
      for (std::int64_t dy = -reach; dy <= reach; ++dy) {
        for (std::int64_t dx = -reach; dx <= reach; ++dx) {
          for (std::uint32_t j : Bucket({c[0] + dx, c[1] + dy, c[2] + dz})) {
            if (Norm2(points_[j] - p) < r2) fn(j);
          }
        }
      }
    }
  }

  const std::vector<Point>& points() const { return points_; }

 private:
  std::int64_t Reach(double r) const;
  std::optional<std::size_t> DenseSlot(const std::array<std::int64_t, 3>& cell) const;
  struct CellHash {
    std::size_t operator()(const std::array<std::int64_t, 3>& c) const;
  };

  std::vector<Point> points_;
  double cell_size_;
  int dim_;
  std::size_t bucket_count_ = 0;

  // Dense layout over the bounding box of occupied cells, or a hash map when
  // the box would be much larger than the point count.
  bool dense_ = true;
  std::array<std::int64_t, 3> min_cell_{};
  std::array<std::int64_t, 3> extent_{};
  std::vector<std::uint32_t> offsets_;
  std::vector<std::uint32_t> order_;
  std::unordered_map<std::array<std::int64_t, 3>, std::pair<std::uint32_t, std::uint32_t>, CellHash>
      sparse_;
};

inline GridIndex BuildGrid(std::span<const Point> points, double cell_size, int dim = 2) {
  return GridIndex(points, cell_size, dim);
}

}  // namespace coxperc
