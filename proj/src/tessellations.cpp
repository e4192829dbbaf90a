#include "coxperc/tessellations.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>

#include "coxperc/rng.hpp"

namespace coxperc {

void SegmentSystem::AddEdge(std::uint32_t u, std::uint32_t v) {
  Segment seg(vertices[u], vertices[v]);
  if (!(seg.length > 0.0)) return;
  total_length += seg.length;
  edges.push_back({u, v, seg});
}

std::uint32_t SegmentSystem::AddVertex(Point p) {
  vertices.push_back(p);
  return static_cast<std::uint32_t>(vertices.size() - 1);
}

SegmentSystem SegmentSystem::Translated(Vec shift) const {
  SegmentSystem out;
  out.window = window.Translated(shift);
  out.total_length = total_length;
  out.vertices.reserve(vertices.size());
  for (const Point& p : vertices) out.vertices.push_back(p + shift);
  out.edges.reserve(edges.size());
  for (const Edge& e : edges) {
    Edge moved = e;
    moved.seg.a = e.seg.a + shift;
    moved.seg.b = e.seg.b + shift;
    out.edges.push_back(moved);
  }
  return out;
}

void WriteSegmentsCsv(const SegmentSystem& sys, std::ostream& out) {
  const auto old_precision = out.precision(17);
  out << "x1,y1,x2,y2,length\n";
  for (const auto& e : sys.edges) {
    out << e.seg.a.x << ',' << e.seg.a.y << ',' << e.seg.b.x << ',' << e.seg.b.y << ','
        << e.seg.length << '\n';
  }
  out.precision(old_precision);
}

// ---------------------------------------------------------------------------
// Delaunay triangulation

namespace {

constexpr std::uint32_t kNone = 0xFFFFFFFEu;

int Next(int k) { return k == 2 ? 0 : k + 1; }
int Prev(int k) { return k == 0 ? 2 : k - 1; }

// Row-snake bucket order keeps consecutive insertions close, so the walk in
// Locate stays short.
std::vector<std::uint32_t> SnakeOrder(std::span<const Point> points) {
  const std::size_t n = points.size();
  double x0 = points[0].x, x1 = x0, y0 = points[0].y, y1 = y0;
  for (const Point& p : points) {
    x0 = std::min(x0, p.x), x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y), y1 = std::max(y1, p.y);
  }
  const auto rows = static_cast<std::int64_t>(std::max(1.0, std::sqrt(static_cast<double>(n) / 4.0)));
  const double h = std::max(y1 - y0, 1e-300) / static_cast<double>(rows);
  auto row = [&](const Point& p) { return std::min<std::int64_t>(rows - 1, static_cast<std::int64_t>((p.y - y0) / h)); };
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t i, std::uint32_t j) {
    const std::int64_t ri = row(points[i]), rj = row(points[j]);
    if (ri != rj) return ri < rj;
    const bool forward = ri % 2 == 0;
    if (points[i].x != points[j].x) return forward ? points[i].x < points[j].x : points[i].x > points[j].x;
    return i < j;
  });
  return order;
}

}  // namespace

bool DelaunayTriangulation::IsInfinite(std::uint32_t tri) const {
  const auto& v = tris_[tri].v;
  return v[0] == kInfinite || v[1] == kInfinite || v[2] == kInfinite;
}

DelaunayTriangulation::DelaunayTriangulation(std::span<const Point> points) : points_(points) {
  const std::size_t n = points_.size();
  if (n > 0xFFFFFFF0u) throw Error(ErrorKind::kParameter, "too many points");
  if (n < 3) throw Error(ErrorKind::kDegenerateInput, "triangulation needs at least 3 points");
  for (const Point& p : points_) {
    if (!IsFinite(p)) throw Error(ErrorKind::kRejectedInput, "non-finite coordinate");
  }

  // Seed triangle: first point, first distinct point, first non-collinear.
  std::uint32_t a = 0, b = kNone, c = kNone;
  for (std::uint32_t i = 1; i < n && b == kNone; ++i) {
    if (!(points_[i] == points_[a])) b = i;
  }
  if (b == kNone) throw Error(ErrorKind::kDegenerateInput, "all points coincide");
  for (std::uint32_t i = b + 1; i < n && c == kNone; ++i) {
    if (Orient2d(points_[a], points_[b], points_[i]) != 0) c = i;
  }
  if (c == kNone) throw Error(ErrorKind::kDegenerateInput, "all points are collinear");
  if (Orient2d(points_[a], points_[b], points_[c]) < 0) std::swap(b, c);

  // Finite triangle 0 plus three ghost triangles across its edges.
  tris_.push_back({{a, b, c}, {kNone, kNone, kNone}});
  for (int k = 0; k < 3; ++k) {
    const std::uint32_t x = tris_[0].v[Next(k)];
    const std::uint32_t y = tris_[0].v[Prev(k)];
    tris_.push_back({{y, x, kInfinite}, {kNone, kNone, 0}});
    tris_[0].nb[k] = static_cast<std::uint32_t>(tris_.size() - 1);
  }
  // Ghost (y, x, inf): slot 0 edge (x, inf), slot 1 edge (inf, y).
  for (std::uint32_t g = 1; g <= 3; ++g) {
    for (std::uint32_t h = 1; h <= 3; ++h) {
      if (g == h) continue;
      if (tris_[h].v[0] == tris_[g].v[1]) tris_[g].nb[0] = h;
    }
  }
  for (std::uint32_t g = 1; g <= 3; ++g) tris_[tris_[g].nb[0]].nb[1] = g;
  last_ = 0;

  for (std::uint32_t i : SnakeOrder(points_)) {
    if (i == a || i == b || i == c) continue;
    Insert(i);
  }
}

bool DelaunayTriangulation::InConflict(std::uint32_t tri, std::uint32_t p) const {
  const auto& v = tris_[tri].v;
  const Point& q = points_[p];
  int inf = -1;
  for (int k = 0; k < 3; ++k) {
    if (v[k] == kInfinite) inf = k;
  }
  if (inf < 0) return InCircle(points_[v[0]], points_[v[1]], points_[v[2]], q) > 0;
  // Ghost triangle: finite edge (x, y) in cyclic order, hull interior on its
  // right. Conflict when q is strictly outside, or on the open edge.
  const Point& x = points_[v[Next(inf)]];
  const Point& y = points_[v[Prev(inf)]];
  const int o = Orient2d(x, y, q);
  if (o > 0) return true;
  if (o < 0) return false;
  return Dot(q - x, y - x) > 0.0 && Dot(q - y, x - y) > 0.0;
}

std::uint32_t DelaunayTriangulation::Locate(std::uint32_t p, std::uint32_t start) const {
  const Point& q = points_[p];
  std::uint32_t t = start;
  std::uint32_t rot = p;  // deterministic edge-order randomisation
  for (std::size_t steps = 0;; ++steps) {
    const auto& tri = tris_[t];
    if (IsInfinite(t)) return t;
    rot = rot * 1103515245u + 12345u;
    const int first = static_cast<int>((rot >> 16) % 3);
    bool moved = false;
    for (int s = 0; s < 3; ++s) {
      const int k = (first + s) % 3;
      const Point& u = points_[tri.v[Next(k)]];
      const Point& w = points_[tri.v[Prev(k)]];
      if (Orient2d(u, w, q) < 0) {
        t = tri.nb[k];
        moved = true;
        break;
      }
    }
    if (!moved) return t;
    if (steps > 4 * tris_.size() + 64) {
      throw Error(ErrorKind::kContractViolation, "point location did not terminate");
    }
  }
}

void DelaunayTriangulation::Insert(std::uint32_t p) {
  const std::uint32_t start = Locate(p, last_);
  for (std::uint32_t v : tris_[start].v) {
    if (v != kInfinite && points_[v] == points_[p]) {
      ++skipped_;
      return;
    }
  }

  struct Boundary {
    std::uint32_t a, b;     // directed edge, cavity on its left
    std::uint32_t outside;  // triangle across the edge
  };
  std::vector<std::uint32_t> cavity{start};
  std::vector<Boundary> boundary;
  std::vector<std::uint32_t> stack{start};
  tris_[start].alive = false;  // marks "in cavity" during the search
  while (!stack.empty()) {
    const std::uint32_t t = stack.back();
    stack.pop_back();
    for (int k = 0; k < 3; ++k) {
      const std::uint32_t nb = tris_[t].nb[k];
      if (!tris_[nb].alive) continue;
      if (InConflict(nb, p)) {
        tris_[nb].alive = false;
        cavity.push_back(nb);
        stack.push_back(nb);
      } else {
        boundary.push_back({tris_[t].v[Next(k)], tris_[t].v[Prev(k)], nb});
      }
    }
  }
  // Edges between two cavity triangles were skipped above; edges to live
  // triangles that were later absorbed must be dropped.
  std::erase_if(boundary, [&](const Boundary& e) { return !tris_[e.outside].alive; });

  std::vector<std::uint32_t> fresh;
  fresh.reserve(boundary.size());
  for (const Boundary& e : boundary) {
    std::uint32_t slot;
    if (!cavity.empty()) {
      slot = cavity.back();
      cavity.pop_back();
      tris_[slot] = Tri{{e.a, e.b, p}, {kNone, kNone, e.outside}, true};
    } else {
      slot = static_cast<std::uint32_t>(tris_.size());
      tris_.push_back(Tri{{e.a, e.b, p}, {kNone, kNone, e.outside}, true});
    }
    auto& out = tris_[e.outside];
    for (int k = 0; k < 3; ++k) {
      if (out.v[Next(k)] == e.b && out.v[Prev(k)] == e.a) out.nb[k] = slot;
    }
    fresh.push_back(slot);
  }
  // (a, b, p): slot 0 is edge (b, p), shared with the fresh triangle whose
  // boundary edge starts at b; slot 1 is edge (p, a), shared with the one
  // whose boundary edge ends at a.
  for (std::size_t i = 0; i < fresh.size(); ++i) {
    for (std::size_t j = 0; j < fresh.size(); ++j) {
      if (boundary[j].a == boundary[i].b) tris_[fresh[i]].nb[0] = fresh[j];
      if (boundary[j].b == boundary[i].a) tris_[fresh[i]].nb[1] = fresh[j];
    }
  }
  // Leftover cavity slots stay dead; mark them unreachable.
  for (std::uint32_t t : cavity) tris_[t].nb = {kNone, kNone, kNone};
  for (std::uint32_t t : fresh) {
    if (!IsInfinite(t)) {
      last_ = t;
      break;
    }
  }
}

std::vector<std::array<std::uint32_t, 3>> DelaunayTriangulation::Triangles() const {
  std::vector<std::array<std::uint32_t, 3>> out;
  for (std::uint32_t t = 0; t < tris_.size(); ++t) {
    if (tris_[t].alive && !IsInfinite(t)) out.push_back(tris_[t].v);
  }
  return out;
}

std::vector<DelaunayTriangulation::DualEdge> DelaunayTriangulation::DualEdges() const {
  std::vector<DualEdge> out;
  for (std::uint32_t t = 0; t < tris_.size(); ++t) {
    if (!tris_[t].alive) continue;
    for (int k = 0; k < 3; ++k) {
      const std::uint32_t u = tris_[t].v[Next(k)];
      const std::uint32_t v = tris_[t].v[Prev(k)];
      if (u == kInfinite || v == kInfinite || u > v) continue;
      out.push_back({u, v, t, tris_[t].nb[k]});
    }
  }
  std::sort(out.begin(), out.end(), [](const DualEdge& x, const DualEdge& y) {
    return std::tie(x.u, x.v) < std::tie(y.u, y.v);
  });
  return out;
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> DelaunayTriangulation::Edges() const {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  for (const DualEdge& e : DualEdges()) out.emplace_back(e.u, e.v);
  return out;
}

// ---------------------------------------------------------------------------
// Segment systems

namespace {

void RequirePlanar(const BoxWindow& window) {
  if (window.dim != 2) {
    throw Error(ErrorKind::kUnsupportedDimension, "tessellations are planar (d = 2)");
  }
}

Point Circumcenter(Point a, Point b, Point c) {
  const double bx = b.x - a.x, by = b.y - a.y;
  const double cx = c.x - a.x, cy = c.y - a.y;
  const double d = 2.0 * (bx * cy - by * cx);
  const double b2 = bx * bx + by * by;
  const double c2 = cx * cx + cy * cy;
  return {a.x + (cy * b2 - by * c2) / d, a.y + (bx * c2 - cx * b2) / d, 0.0};
}

// Clips the segment (p, q) to the window and adds it. `pv`/`qv` are vertex
// ids used when the corresponding endpoint survives clipping unchanged.
template <typename VertexP, typename VertexQ>
void AddClipped(SegmentSystem& sys, Point p, Point q, VertexP&& vertex_p, VertexQ&& vertex_q,
                bool q_is_finite = true) {
  const Segment seg(p, q);
  const auto t = ClipToBox(seg, sys.window);
  if (!t) return;
  const std::uint32_t u = t->first == 0.0 ? vertex_p() : sys.AddVertex(seg.At(t->first));
  const std::uint32_t v =
      (t->second == 1.0 && q_is_finite) ? vertex_q() : sys.AddVertex(seg.At(t->second));
  sys.AddEdge(u, v);
}

// Merges vertices joined by zero-length edges (cocircular seed quadruples
// produce coincident circumcentres) and drops unused vertices.
void CompactVertices(SegmentSystem& sys, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& merges) {
  std::vector<std::uint32_t> parent(sys.vertices.size());
  std::iota(parent.begin(), parent.end(), 0u);
  auto find = [&](std::uint32_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (auto [a, b] : merges) {
    const auto ra = find(a), rb = find(b);
    if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
  }
  std::vector<std::uint32_t> remap(sys.vertices.size(), kNone);
  std::vector<Point> kept;
  for (auto& e : sys.edges) {
    for (std::uint32_t* end : {&e.u, &e.v}) {
      const std::uint32_t root = find(*end);
      if (remap[root] == kNone) {
        remap[root] = static_cast<std::uint32_t>(kept.size());
        kept.push_back(sys.vertices[root]);
      }
      *end = remap[root];
    }
    e.seg = Segment(kept[e.u], kept[e.v]);
  }
  sys.vertices = std::move(kept);
  sys.total_length = 0.0;
  for (const auto& e : sys.edges) sys.total_length += e.seg.length;
}

SegmentSystem CollinearVoronoi(std::span<const Point> seeds, const BoxWindow& window) {
  SegmentSystem sys;
  sys.window = window;
  std::vector<Point> sorted(seeds.begin(), seeds.end());
  const Vec dir = sorted[1] - sorted[0];
  std::sort(sorted.begin(), sorted.end(),
            [&](const Point& x, const Point& y) { return Dot(x - sorted[0], dir) < Dot(y - sorted[0], dir); });
  const double far = 4.0 * (window.side + Distance(window.center, sorted[0]) + Norm(dir));
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    if (sorted[i] == sorted[i + 1]) continue;
    const Point mid = 0.5 * (sorted[i] + sorted[i + 1]);
    const Vec d = sorted[i + 1] - sorted[i];
    const Vec normal = (1.0 / Norm(d)) * Vec{-d.y, d.x, 0.0};
    const Point p = mid - far * normal;
    const Point q = mid + far * normal;
    const Segment seg(p, q);
    const auto t = ClipToBox(seg, window);
    if (!t) continue;
    const auto u = sys.AddVertex(seg.At(t->first));
    const auto v = sys.AddVertex(seg.At(t->second));
    sys.AddEdge(u, v);
  }
  return sys;
}

}  // namespace

SegmentSystem VoronoiSegments(std::span<const Point> seeds, const BoxWindow& window) {
  RequirePlanar(window);
  if (seeds.size() < 2) throw Error(ErrorKind::kDegenerateInput, "Voronoi needs at least 2 seeds");
  bool collinear = true;
  for (std::size_t i = 2; i < seeds.size() && collinear; ++i) {
    collinear = Orient2d(seeds[0], seeds[1], seeds[i]) == 0;
  }
  if (collinear) return CollinearVoronoi(seeds, window);

  const DelaunayTriangulation dt(seeds);
  SegmentSystem sys;
  sys.window = window;
  const std::size_t slots = dt.TriangleSlots();
  std::vector<std::uint32_t> cc_vertex(slots, kNone);
  std::vector<Point> cc_point(slots);
  std::vector<std::uint8_t> has_point(slots, 0);
  auto center_of = [&](std::uint32_t tri) {
    if (!has_point[tri]) {
      const auto& v = dt.Vertices(tri);
      cc_point[tri] = Circumcenter(seeds[v[0]], seeds[v[1]], seeds[v[2]]);
      has_point[tri] = 1;
    }
    return cc_point[tri];
  };
  auto vertex_of = [&](std::uint32_t tri) {
    if (cc_vertex[tri] == kNone) cc_vertex[tri] = sys.AddVertex(center_of(tri));
    return cc_vertex[tri];
  };

  std::vector<std::pair<std::uint32_t, std::uint32_t>> merges;
  for (const auto& e : dt.DualEdges()) {
    const bool left_inf = dt.IsInfinite(e.left);
    const bool right_inf = dt.IsInfinite(e.right);
    if (left_inf && right_inf) continue;
    if (!left_inf && !right_inf) {
      const Point p = center_of(e.left);
      const Point q = center_of(e.right);
      if (p == q) {
        merges.emplace_back(vertex_of(e.left), vertex_of(e.right));
        continue;
      }
      AddClipped(sys, p, q, [&] { return vertex_of(e.left); }, [&] { return vertex_of(e.right); });
      continue;
    }
    // Hull edge: ray from the finite circumcentre away from the hull.
    const std::uint32_t finite = left_inf ? e.right : e.left;
    const Point a = seeds[left_inf ? e.v : e.u];
    const Point b = seeds[left_inf ? e.u : e.v];
    const Vec d = b - a;
    const Vec outward = (1.0 / Norm(d)) * Vec{d.y, -d.x, 0.0};
    const Point p = center_of(finite);
    const double far = 2.0 * (Distance(p, window.center) + window.side);
    AddClipped(sys, p, p + far * outward, [&] { return vertex_of(finite); },
               [] { return kNone; }, false);
  }
  CompactVertices(sys, merges);
  return sys;
}

SegmentSystem DelaunaySegments(std::span<const Point> seeds, const BoxWindow& window) {
  RequirePlanar(window);
  const DelaunayTriangulation dt(seeds);
  SegmentSystem sys;
  sys.window = window;
  std::vector<std::uint32_t> id(seeds.size(), kNone);
  auto vertex_of = [&](std::uint32_t s) {
    if (id[s] == kNone) id[s] = sys.AddVertex(seeds[s]);
    return id[s];
  };
  for (const auto& [u, v] : dt.Edges()) {
    AddClipped(sys, seeds[u], seeds[v], [&, u = u] { return vertex_of(u); },
               [&, v = v] { return vertex_of(v); });
  }
  return sys;
}

SegmentSystem LineSegments(std::span<const Line> lines, const BoxWindow& window) {
  RequirePlanar(window);
  SegmentSystem sys;
  sys.window = window;
  const double far = 2.0 * window.side;

  struct Clipped {
    Point origin;
    Vec dir;
    double t0, t1;
    bool hit;
  };
  std::vector<Clipped> clipped;
  clipped.reserve(lines.size());
  for (const Line& l : lines) {
    const Vec normal{std::cos(l.angle), std::sin(l.angle), 0.0};
    const Vec dir{-normal.y, normal.x, 0.0};
    const Point origin = window.center + l.offset * normal;
    const Segment seg(origin - far * dir, origin + far * dir);
    const auto t = ClipToBox(seg, window);
    if (!t) {
      clipped.push_back({origin, dir, 0.0, 0.0, false});
      continue;
    }
    clipped.push_back({origin, dir, -far + 2.0 * far * t->first, -far + 2.0 * far * t->second, true});
  }

  // Per line: sorted (parameter, vertex id) breakpoints.
  std::vector<std::vector<std::pair<double, std::uint32_t>>> cuts(clipped.size());
  for (std::size_t i = 0; i < clipped.size(); ++i) {
    if (!clipped[i].hit) continue;
    cuts[i].emplace_back(clipped[i].t0, sys.AddVertex(clipped[i].origin + clipped[i].t0 * clipped[i].dir));
    cuts[i].emplace_back(clipped[i].t1, sys.AddVertex(clipped[i].origin + clipped[i].t1 * clipped[i].dir));
  }
  for (std::size_t i = 0; i < clipped.size(); ++i) {
    if (!clipped[i].hit) continue;
    for (std::size_t j = i + 1; j < clipped.size(); ++j) {
      if (!clipped[j].hit) continue;
      const Clipped& a = clipped[i];
      const Clipped& b = clipped[j];
      const double den = a.dir.x * b.dir.y - a.dir.y * b.dir.x;
      if (den == 0.0) continue;
      const Vec w = b.origin - a.origin;
      const double ta = (w.x * b.dir.y - w.y * b.dir.x) / den;
      const double tb = (w.x * a.dir.y - w.y * a.dir.x) / den;
      if (ta <= a.t0 || ta >= a.t1 || tb <= b.t0 || tb >= b.t1) continue;
      const std::uint32_t v = sys.AddVertex(a.origin + ta * a.dir);
      cuts[i].emplace_back(ta, v);
      cuts[j].emplace_back(tb, v);
    }
  }
  for (auto& c : cuts) {
    std::sort(c.begin(), c.end());
    for (std::size_t k = 0; k + 1 < c.size(); ++k) sys.AddEdge(c[k].second, c[k + 1].second);
  }
  return sys;
}

SegmentSystem LineTessellation(double line_intensity, const BoxWindow& window, std::uint64_t seed) {
  RequirePlanar(window);
  if (!(line_intensity >= 0.0)) throw Error(ErrorKind::kParameter, "line_intensity must be >= 0");
  Rng rng(seed);
  const double radius = window.half() * std::numbers::sqrt2;
  const auto count = line_intensity > 0.0
                         ? std::poisson_distribution<std::int64_t>(line_intensity * 2.0 * radius)(rng)
                         : 0;
  std::vector<Line> lines(static_cast<std::size_t>(count));
  for (Line& l : lines) {
    l.angle = rng.Uniform(0.0, std::numbers::pi);
    l.offset = rng.Uniform(-radius, radius);
  }
  return LineSegments(lines, window);
}

std::vector<Point> PoissonSeeds(double intensity, const BoxWindow& window, std::uint64_t seed) {
  if (!(intensity >= 0.0)) throw Error(ErrorKind::kParameter, "intensity must be >= 0");
  Rng rng(seed);
  std::vector<Point> out;
  if (intensity == 0.0) return out;
  const auto count = std::poisson_distribution<std::int64_t>(intensity * window.volume())(rng);
  out.resize(static_cast<std::size_t>(count));
  for (Point& p : out) {
    for (int k = 0; k < window.dim; ++k) p[k] = rng.Uniform(window.lo(k), window.hi(k));
  }
  return out;
}

}  // namespace coxperc
