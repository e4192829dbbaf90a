#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include "coxperc/rng.hpp"
#include "coxperc/tessellations.hpp"

using namespace coxperc;

namespace {

double SquaredRadius(Point a, Point b, Point c, Point& center) {
  const double d = 2 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
  const double a2 = Norm2(a), b2 = Norm2(b), c2 = Norm2(c);
  center = {(a2 * (b.y - c.y) + b2 * (c.y - a.y) + c2 * (a.y - b.y)) / d,
            (a2 * (c.x - b.x) + b2 * (a.x - c.x) + c2 * (b.x - a.x)) / d, 0.0};
  return Norm2(a - center);
}

}  // namespace

TEST_CASE("orientation is exact on nearly collinear input") {
  const Point a{0.5, 0.5, 0}, b{12, 12, 0}, c{24, 24, 0};
  CHECK(Orient2d(a, b, c) == 0);
  const Point d{24, std::nextafter(24.0, 25.0), 0};
  CHECK(Orient2d(a, b, d) > 0);
  const Point e{24, std::nextafter(24.0, 23.0), 0};
  CHECK(Orient2d(a, b, e) < 0);
  CHECK(InCircle({0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}) == 0);
  CHECK(InCircle({0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0.5, 0.5, 0}) > 0);
  CHECK(InCircle({0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {2, 2, 0}) < 0);
}

TEST_CASE("Delaunay triangles have empty circumcircles") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto pts = PoissonSeeds(60.0, BoxWindow::Centered(3.0), seed);
    const DelaunayTriangulation dt(pts);
    const auto tris = dt.Triangles();
    // Euler: 2n - 2 - h triangles for n points with h on the hull.
    CHECK(tris.size() <= 2 * pts.size());
    for (const auto& t : tris) {
      CHECK(Orient2d(pts[t[0]], pts[t[1]], pts[t[2]]) > 0);
      for (std::uint32_t q = 0; q < pts.size(); ++q) {
        if (q == t[0] || q == t[1] || q == t[2]) continue;
        CHECK(InCircle(pts[t[0]], pts[t[1]], pts[t[2]], pts[q]) <= 0);
      }
    }
    CHECK(dt.Edges().size() <= 3 * pts.size() - 6);
  }
}

TEST_CASE("four points in convex position take the legal diagonal") {
  const std::vector<Point> pts{{0, 0, 0}, {4, 0, 0}, {4, 1, 0}, {0, 1.2, 0}};
  const DelaunayTriangulation dt(pts);
  const auto edges = dt.Edges();
  CHECK(edges.size() == 5);
  for (const auto& t : dt.Triangles()) {
    for (std::uint32_t q = 0; q < 4; ++q) {
      if (q != t[0] && q != t[1] && q != t[2]) CHECK(InCircle(pts[t[0]], pts[t[1]], pts[t[2]], pts[q]) < 0);
    }
  }
}

TEST_CASE("duplicates are skipped and degenerate input rejected") {
  const std::vector<Point> dup{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 0, 0}};
  const DelaunayTriangulation dt(dup);
  CHECK(dt.skipped_duplicates() == 1);
  CHECK(dt.Triangles().size() == 1);
  const std::vector<Point> line{{0, 0, 0}, {1, 1, 0}, {2, 2, 0}};
  CHECK_THROWS_AS(DelaunaySegments(line, BoxWindow::Centered(5.0)), Error);
  const std::vector<Point> two{{0, 0, 0}, {1, 1, 0}};
  CHECK_THROWS_AS(DelaunaySegments(two, BoxWindow::Centered(5.0)), Error);
}

TEST_CASE("two seeds give the perpendicular bisector") {
  const std::vector<Point> seeds{{-1, 0, 0}, {1, 0, 0}};
  const SegmentSystem sys = VoronoiSegments(seeds, BoxWindow::Centered(4.0));
  REQUIRE(sys.edges.size() == 1);
  CHECK(sys.total_length == doctest::Approx(4.0));
  CHECK(sys.edges[0].seg.a.x == doctest::Approx(0.0));
  CHECK(sys.edges[0].seg.b.x == doctest::Approx(0.0));
  const std::vector<Point> one{{0, 0, 0}};
  CHECK_THROWS_AS(VoronoiSegments(one, BoxWindow::Centered(4.0)), Error);
  CHECK_THROWS_AS(VoronoiSegments(seeds, BoxWindow::Centered(4.0, 3)), Error);
}

TEST_CASE("three seeds: edges meet at the circumcentre") {
  const std::vector<Point> seeds{{0, 0, 0}, {2, 0, 0}, {0.5, 1.5, 0}};
  const SegmentSystem sys = VoronoiSegments(seeds, BoxWindow::Centered(20.0));
  REQUIRE(sys.edges.size() == 3);
  Point cc;
  SquaredRadius(seeds[0], seeds[1], seeds[2], cc);
  std::set<std::uint32_t> ends;
  for (const auto& e : sys.edges) ends.insert(e.u), ends.insert(e.v);
  int hits = 0;
  for (const Point& v : sys.vertices) hits += Distance(v, cc) < 1e-12;
  CHECK(hits == 1);
}

TEST_CASE("Voronoi vertices are equidistant from their nearest seeds") {
  const BoxWindow w = BoxWindow::Centered(4.0);
  const auto seeds = PoissonSeeds(30.0, w.Dilated(2.0), 7);
  const SegmentSystem sys = VoronoiSegments(seeds, w);
  for (const auto& e : sys.edges) {
    const Point mid = e.seg.At(0.5);
    // The two nearest seeds of an edge midpoint are at equal distance.
    double d1 = 1e300, d2 = 1e300;
    for (const Point& s : seeds) {
      const double d = Distance(s, mid);
      if (d < d1) {
        d2 = d1;
        d1 = d;
      } else if (d < d2) {
        d2 = d;
      }
    }
    CHECK(std::abs(d2 - d1) < 1e-9);
    CHECK(w.Contains(e.seg.a));
    CHECK(w.Contains(e.seg.b));
  }
}

TEST_CASE("Delaunay with three seeds gives the triangle") {
  const std::vector<Point> seeds{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  const SegmentSystem sys = DelaunaySegments(seeds, BoxWindow::Centered(5.0));
  CHECK(sys.edges.size() == 3);
  CHECK(sys.total_length == doctest::Approx(2 + std::sqrt(2.0)));
}

TEST_CASE("line systems") {
  const BoxWindow w = BoxWindow::Centered(2.0);
  CHECK(LineSegments({}, w).edges.empty());
  const std::vector<Line> one{{0.0, 0.0}};
  const SegmentSystem h = LineSegments(one, w);
  REQUIRE(h.edges.size() == 1);
  CHECK(h.total_length == doctest::Approx(2.0));
  // Normal angle 0 is a vertical line; split at the crossing.
  const std::vector<Line> cross{{0.0, 0.0}, {std::acos(-1.0) / 2, 0.0}};
  const SegmentSystem x = LineSegments(cross, w);
  CHECK(x.edges.size() == 4);
  CHECK(x.total_length == doctest::Approx(4.0));
  std::ostringstream csv;
  WriteSegmentsCsv(x, csv);
  const std::string text = csv.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 5);
}

TEST_CASE("line tessellation length intensity") {
  const BoxWindow w = BoxWindow::Centered(10.0);
  double total = 0.0;
  const int reps = 400;
  for (int i = 0; i < reps; ++i) total += LineTessellation(1.5, w, StreamKey({3, std::uint64_t(i)})).total_length;
  // Length per unit area: mean 1.5, sd per replicate about sqrt(2 * 1.5 * 7.07) * 10 / 100.
  CHECK(total / reps / w.volume() == doctest::Approx(1.5).epsilon(0.05));
}

TEST_CASE("Poisson seeds are reproducible") {
  const auto a = PoissonSeeds(5.0, BoxWindow::Centered(3.0), 11);
  const auto b = PoissonSeeds(5.0, BoxWindow::Centered(3.0), 11);
  CHECK(a == b);
  CHECK(PoissonSeeds(0.0, BoxWindow::Centered(3.0), 11).empty());
}
