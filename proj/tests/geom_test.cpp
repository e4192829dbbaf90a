#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "coxperc/geom.hpp"
#include "coxperc/rng.hpp"

using namespace coxperc;

namespace {

std::vector<Point> UniformPoints(std::size_t n, double side, int dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Point> pts(n);
  for (auto& p : pts) {
    p.x = rng.Uniform(-side / 2, side / 2);
    p.y = rng.Uniform(-side / 2, side / 2);
    if (dim == 3) p.z = rng.Uniform(-side / 2, side / 2);
  }
  return pts;
}

std::vector<std::uint32_t> Scan(const std::vector<Point>& pts, Point p, double r) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t j = 0; j < pts.size(); ++j) {
    if (Distance(pts[j], p) < r) out.push_back(j);
  }
  return out;
}

}  // namespace

TEST_CASE("empty index has no buckets") {
  const std::vector<Point> none;
  const GridIndex g(none, 1.0);
  CHECK(g.size() == 0);
  CHECK(g.bucket_count() == 0);
  CHECK(g.NeighborsWithin({0, 0, 0}, 1.0).empty());
  CHECK_FALSE(g.Nearest({0, 0, 0}).has_value());
}

TEST_CASE("points in the same unit cell share a bucket") {
  const std::vector<Point> pts{{0.1, 0.1, 0}, {0.9, 0.9, 0}};
  const GridIndex g(pts, 1.0);
  CHECK(g.CellOf(pts[0]) == g.CellOf(pts[1]));
  CHECK(g.Bucket(g.CellOf(pts[0])).size() == 2);
  CHECK(g.bucket_count() == 1);
}

TEST_CASE("neighbour queries equal an all-pairs scan") {
  for (int dim : {2, 3}) {
    const auto pts = UniformPoints(dim == 2 ? 100 : 300, 10.0, dim, 17 + dim);
    const GridIndex g(pts, 0.5, dim);
    for (const Point& p : pts) {
      CHECK(g.NeighborsWithin(p, 1.3) == Scan(pts, p, 1.3));
      CHECK(g.NeighborsWithin(p, 0.2) == Scan(pts, p, 0.2));
    }
    const auto probes = UniformPoints(50, 12.0, dim, 99);
    for (const Point& p : probes) CHECK(g.NeighborsWithin(p, 2.1) == Scan(pts, p, 2.1));
  }
}

TEST_CASE("200 random points at r = 0.3") {
  const auto pts = UniformPoints(200, 3.0, 2, 5);
  const GridIndex g(pts, 0.3);
  for (const Point& p : pts) CHECK(g.NeighborsWithin(p, 0.3) == Scan(pts, p, 0.3));
}

TEST_CASE("distance exactly r is excluded") {
  const std::vector<Point> pts{{0, 0, 0}, {0.5, 0, 0}};
  const GridIndex g(pts, 0.25);
  CHECK(g.NeighborsWithin(pts[0], 0.5) == std::vector<std::uint32_t>{0});
  CHECK(g.NeighborsWithin(pts[0], 0.5000001) == std::vector<std::uint32_t>{0, 1});
}

TEST_CASE("a lone point finds itself") {
  const std::vector<Point> pts{{3.2, -1.1, 0}};
  const GridIndex g(pts, 0.7);
  CHECK(g.NeighborsWithin(pts[0], 1.0) == std::vector<std::uint32_t>{0});
}

TEST_CASE("sparse layout for spread out points") {
  const std::vector<Point> pts{{0, 0, 0}, {1e6, 1e6, 0}, {-1e6, 5, 0}};
  const GridIndex g(pts, 0.1);
  CHECK(g.NeighborsWithin({1e6, 1e6 + 0.05, 0}, 0.1) == std::vector<std::uint32_t>{1});
  CHECK(g.Nearest({-9e5, 0, 0}).value() == 2);
}

TEST_CASE("nearest agrees with a scan") {
  for (int dim : {2, 3}) {
    const auto pts = UniformPoints(150, 6.0, dim, 41);
    const GridIndex g(pts, 0.4, dim);
    for (const Point& q : UniformPoints(200, 9.0, dim, 42)) {
      double best = std::numeric_limits<double>::infinity();
      for (const Point& p : pts) best = std::min(best, Distance(p, q));
      CHECK(Distance(pts[*g.Nearest(q)], q) == doctest::Approx(best).epsilon(1e-15));
    }
  }
}

TEST_CASE("grid rejects bad input") {
  const std::vector<Point> bad{{0, std::numeric_limits<double>::quiet_NaN(), 0}};
  CHECK_THROWS_AS(GridIndex(bad, 1.0), Error);
  const std::vector<Point> ok{{0, 0, 0}};
  CHECK_THROWS_AS(GridIndex(ok, 0.0), Error);
  CHECK_THROWS_AS(GridIndex(ok, 1.0).NeighborsWithin({}, 0.0), Error);
  try {
    GridIndex(bad, 1.0);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kRejectedInput);
  }
}

TEST_CASE("segment clipping") {
  const Segment s({0, 0, 0}, {2, 0, 0});
  CHECK(ClippedLength(s, BoxWindow::Centered(2.0)) == doctest::Approx(1.0));
  CHECK(ClippedLength(Segment({-3, -3, 0}, {3, 3, 0}), BoxWindow::Centered(2.0)) == doctest::Approx(2 * std::sqrt(2.0)));
  CHECK(ClippedLength(Segment({2, 2, 0}, {3, 3, 0}), BoxWindow::Centered(2.0)) == 0.0);
  const auto t = ClipToBox(s, BoxWindow::Centered(2.0));
  REQUIRE(t.has_value());
  CHECK(t->first == doctest::Approx(0.0));
  CHECK(t->second == doctest::Approx(0.5));
  // Touching a corner only.
  CHECK_FALSE(ClipToBox(Segment({1, 2, 0}, {2, 1, 0}), BoxWindow::Centered(2.0)).has_value());
}

TEST_CASE("segment length inside a ball") {
  CHECK(ClippedLengthInBall(Segment({-5, 0, 0}, {5, 0, 0}), {0, 0, 0}, 1.5) == doctest::Approx(3.0));
  CHECK(ClippedLengthInBall(Segment({0, 0, 0}, {5, 0, 0}), {0, 0, 0}, 1.5) == doctest::Approx(1.5));
  CHECK(ClippedLengthInBall(Segment({-5, 1, 0}, {5, 1, 0}), {0, 0, 0}, 2.0) == doctest::Approx(2 * std::sqrt(3.0)));
  CHECK(ClippedLengthInBall(Segment({-5, 3, 0}, {5, 3, 0}), {0, 0, 0}, 2.0) == 0.0);
}

TEST_CASE("box overlap and ball volume") {
  const BoxWindow a = BoxWindow::Centered(2.0);
  const BoxWindow b({1.5, 0.5, 0}, 2.0);
  CHECK(OverlapVolume(a, b) == doctest::Approx(0.5 * 1.5));
  CHECK(OverlapVolume(a, BoxWindow({5, 0, 0}, 1.0)) == 0.0);
  CHECK(BallVolume(2, 2.0) == doctest::Approx(4 * std::numbers::pi));
  CHECK(BallVolume(3, 1.0) == doctest::Approx(4.0 / 3.0 * std::numbers::pi));
  CHECK(a.ContainsBox(BoxWindow::Centered(2.0)));
  CHECK_FALSE(a.ContainsBox(b));
  CHECK_THROWS_AS(BoxWindow({}, -1.0), Error);
  CHECK_THROWS_AS(BoxWindow({}, 1.0, 4), Error);
}
