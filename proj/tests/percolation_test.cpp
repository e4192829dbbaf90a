#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>
#include <vector>

#include "coxperc/percolation.hpp"
#include "coxperc/rng.hpp"

using namespace coxperc;

namespace {

std::vector<Point> RandomPattern(std::size_t n, double side, int dim, std::uint64_t seed, bool origin = true) {
  Rng rng(seed);
  std::vector<Point> pts;
  if (origin) pts.push_back(Point{});
  while (pts.size() < n) {
    Point p{rng.Uniform(-side / 2, side / 2), rng.Uniform(-side / 2, side / 2), 0.0};
    if (dim == 3) p.z = rng.Uniform(-side / 2, side / 2);
    pts.push_back(p);
  }
  return pts;
}

// Component labels by breadth-first search over all pairs.
std::vector<int> BfsLabels(const std::vector<Point>& pts, double r, const std::vector<bool>& keep) {
  std::vector<int> label(pts.size(), -1);
  int next = 0;
  for (std::size_t s = 0; s < pts.size(); ++s) {
    if (!keep[s] || label[s] >= 0) continue;
    std::queue<std::size_t> q;
    q.push(s);
    label[s] = next;
    while (!q.empty()) {
      const std::size_t i = q.front();
      q.pop();
      for (std::size_t j = 0; j < pts.size(); ++j) {
        if (keep[j] && label[j] < 0 && Distance(pts[i], pts[j]) < r) {
          label[j] = next;
          q.push(j);
        }
      }
    }
    ++next;
  }
  return label;
}

bool BruteReach(const std::vector<Point>& pts, double r, double a, const std::vector<bool>& keep) {
  const auto label = BfsLabels(pts, r, keep);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (keep[i] && label[i] == label[0] && SupNorm(pts[i]) >= 0.5 * (a - 2 * r)) return true;
  }
  return false;
}

SegmentSystem Path(const std::vector<double>& xs) {
  SegmentSystem sys;
  sys.window = BoxWindow::Centered(2 * (std::abs(xs.front()) + std::abs(xs.back())) + 2);
  for (double x : xs) sys.AddVertex({x, 0, 0});
  for (std::uint32_t i = 0; i + 1 < xs.size(); ++i) sys.AddEdge(i, i + 1);
  return sys;
}

}  // namespace

TEST_CASE("union-find") {
  UnionFind uf(5);
  CHECK(uf.components() == 5);
  CHECK(uf.Unite(0, 1));
  CHECK_FALSE(uf.Unite(1, 0));
  CHECK(uf.Unite(3, 4));
  CHECK(uf.Unite(1, 4));
  CHECK(uf.components() == 2);
  CHECK(uf.Find(0) == uf.Find(3));
  CHECK(uf.Find(2) != uf.Find(0));
  CHECK(uf.unions() == 3);
}

TEST_CASE("Gilbert components match breadth-first search") {
  for (int dim : {2, 3}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto pts = RandomPattern(150, 8.0, dim, seed);
      const double r = dim == 2 ? 0.6 : 1.0;
      const GilbertGraph g = BuildGilbert(pts, r);
      const auto bfs = BfsLabels(pts, r, std::vector<bool>(pts.size(), true));
      for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = 0; j < pts.size(); ++j) CHECK((bfs[i] == bfs[j]) == g.Connected(i, j));
      }
      CHECK(g.components == static_cast<std::size_t>(*std::max_element(bfs.begin(), bfs.end()) + 1));
    }
  }
}

TEST_CASE("edges use strict distance") {
  const std::vector<Point> pair{{0, 0, 0}, {1, 0, 0}};
  CHECK_FALSE(BuildGilbert(pair, 1.0).Connected(0, 1));
  CHECK(BuildGilbert(pair, std::nextafter(1.0, 2.0)).Connected(0, 1));
  CHECK_THROWS_AS(BuildGilbert(pair, 0.0), Error);
}

TEST_CASE("a chain at spacing 0.9 r reaches the boundary") {
  std::vector<Point> chain;
  for (int i = 0; i <= 12; ++i) chain.push_back({0.9 * i, 0, 0});
  const GilbertGraph g = BuildGilbert(chain, 1.0);
  CHECK(g.components == 1);
  // Level (a - 2r)/2: the last point sits at 10.8.
  CHECK(OriginReachesBoundary(g, 23.6));
  CHECK_FALSE(OriginReachesBoundary(g, 23.7));
  chain.erase(chain.begin() + 6);
  const GilbertGraph broken = BuildGilbert(chain, 1.0);
  CHECK(OriginReachesBoundary(broken, 10.0));
  CHECK_FALSE(OriginReachesBoundary(broken, 12.0));
  CHECK(broken.ComponentOf(0).size() == 6);
}

TEST_CASE("reach requires the origin first and a large box") {
  const std::vector<Point> shifted{{1, 0, 0}};
  CHECK_THROWS_AS(OriginReachesBoundary(BuildGilbert(shifted, 1.0), 10.0), Error);
  const std::vector<Point> origin{{0, 0, 0}};
  CHECK_THROWS_AS(OriginReachesBoundary(BuildGilbert(origin, 1.0), 4.0), Error);
  CHECK_FALSE(OriginReachesBoundary(BuildGilbert(origin, 1.0), 4.5));
}

TEST_CASE("reach equals brute force") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto pts = RandomPattern(120, 10.0, 2, 100 + seed);
    const double r = 0.8 + 0.02 * seed;
    CHECK(OriginReachesBoundary(BuildGilbert(pts, r), 10.0) ==
          BruteReach(pts, r, 10.0, std::vector<bool>(pts.size(), true)));
  }
}

TEST_CASE("reach threshold agrees with thinning at every level") {
  for (int dim : {2, 3}) {
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
      const auto pts = RandomPattern(dim == 2 ? 200 : 300, 8.0, dim, 500 + seed);
      std::vector<double> marks(pts.size(), 0.0);
      for (std::size_t i = 1; i < pts.size(); ++i) marks[i] = ThinningMark(seed, i);
      const double r = dim == 2 ? 0.9 : 1.3;
      const double t = OriginReachThreshold(pts, marks, r, 8.0);
      for (double q : {0.1, 0.3, 0.5, 0.7, 0.9, 1.0}) {
        std::vector<bool> keep(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) keep[i] = i == 0 || marks[i] < q;
        CHECK((t < q) == BruteReach(pts, r, 8.0, keep));
      }
      if (t <= 1.0) {
        // Exactly at the threshold the point is not yet kept.
        std::vector<bool> keep(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) keep[i] = i == 0 || marks[i] < t;
        CHECK_FALSE(BruteReach(pts, r, 8.0, keep));
      }
    }
  }
}

TEST_CASE("reach threshold edge cases") {
  const std::vector<Point> lone{{0, 0, 0}};
  const std::vector<double> m{0.0};
  CHECK(OriginReachThreshold(lone, m, 1.0, 5.0) > 1.0);
  const std::vector<Point> two{{0, 0, 0}, {0.5, 0, 0}};
  CHECK_THROWS_AS(OriginReachThreshold(two, m, 1.0, 5.0), Error);
  // Level 1.25 needs both chain points; the later mark decides.
  const std::vector<Point> chain{{0, 0, 0}, {0.9, 0, 0}, {1.8, 0, 0}};
  const std::vector<double> m3{0.0, 0.4, 0.2};
  CHECK(OriginReachThreshold(chain, m3, 1.0, 4.5) == 0.4);
}

TEST_CASE("gap model rule on hand cases") {
  const SegmentSystem sys = Path({0.0, 1.0});
  CHECK(GapModelOpen(sys, {{}}, 0.6) == std::vector<std::uint8_t>{0});
  CHECK(GapModelOpen(sys, {{0.5}}, 0.6) == std::vector<std::uint8_t>{1});
  CHECK(GapModelOpen(sys, {{0.5}}, 0.5) == std::vector<std::uint8_t>{0});
  CHECK(GapModelOpen(sys, {{0.3, 0.7}}, 0.41) == std::vector<std::uint8_t>{1});
  CHECK(GapModelOpen(sys, {{0.7, 0.1}}, 0.35) == std::vector<std::uint8_t>{0});
  CHECK(GapModelOpen(sys, {{0.1, 0.45, 0.8}}, 0.36) == std::vector<std::uint8_t>{1});
  CHECK_THROWS_AS(GapModelOpen(sys, {}, 0.5), Error);
}

TEST_CASE("splitting an edge") {
  const SegmentSystem sys = Path({0.0, 2.0, 3.0});
  const auto [split, mid] = SplitEdge(sys, 0, 0.25);
  CHECK(split.edges.size() == 3);
  CHECK(split.vertices[mid] == Point{0.5, 0, 0});
  CHECK(split.edges[0].seg.length == doctest::Approx(0.5));
  CHECK(split.edges.back().seg.length == doctest::Approx(1.5));
  CHECK(split.edges.back().v == 1);
  CHECK(NearestVertex(split, {0.6, 0.1, 0}) == mid);
  CHECK_THROWS_AS(SplitEdge(sys, 5, 0.5), Error);
}

TEST_CASE("bond clusters") {
  const SegmentSystem sys = Path({0.0, 1.0, 2.0, 3.0, 4.0});
  const BondConfig all = SampleBonds(sys, 1.0, 3);
  CHECK(std::all_of(all.open.begin(), all.open.end(), [](auto v) { return v == 1; }));
  CHECK(BondClusterEscapes(sys, all.open, 0, {0, 0, 0}, 4.0));
  const BondConfig none = SampleBonds(sys, 0.0, 3);
  CHECK(std::none_of(none.open.begin(), none.open.end(), [](auto v) { return v == 1; }));
  CHECK_FALSE(BondClusterEscapes(sys, none.open, 0, {0, 0, 0}, 1.0));
  std::vector<std::uint8_t> open{1, 1, 0, 1};
  CHECK(BondClusterEscapes(sys, open, 0, {0, 0, 0}, 2.0));
  CHECK_FALSE(BondClusterEscapes(sys, open, 0, {0, 0, 0}, 2.5));
  CHECK_THROWS_AS(SampleBonds(sys, 1.5, 3), Error);

  // Edge of length 2 open with probability b^2.
  const SegmentSystem single = Path({0.0, 2.0});
  int opened = 0;
  for (int i = 0; i < 4000; ++i) opened += SampleBonds(single, 0.8, i).open[0];
  CHECK(std::abs(opened / 4000.0 - 0.64) < 4 * std::sqrt(0.64 * 0.36 / 4000));
}

TEST_CASE("bond percolation on a path") {
  SegmentSystem sys;
  sys.window = BoxWindow::Centered(6.0);
  for (int i = -3; i <= 3; ++i) sys.AddVertex({double(i), 0, 0});
  for (std::uint32_t i = 0; i + 1 < 7; ++i) sys.AddEdge(i, i + 1);
  // Root at x = 0; reaching sup-norm 2 needs two consecutive open unit edges
  // on either side: 1 - (1 - b^2)^2.
  const double b = 0.7;
  const BondEstimate est = BondPercolationTheta(sys, b, 4.0, 6000, 9);
  const double exact = 1 - (1 - b * b) * (1 - b * b);
  CHECK(std::abs(est.mean - exact) < 4 * est.std_error);
  SegmentSystem empty;
  CHECK(BondPercolationTheta(empty, b, 4.0, 10, 9).flagged);
}

TEST_CASE("single edge survival and its bracket") {
  const BondEstimate f = EdgeSurvivalFrequency(1.0, 3.0, 0.5, 20000, 4);
  // Points of rate 3 on [0, 1]: open iff all spacings in the extended
  // sequence are < 0.5. Oracle by direct simulation below.
  Rng rng(77);
  std::exponential_distribution<double> gap(3.0);
  int open = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    std::vector<double> t;
    double x = gap(rng);
    while (x < 1.0) {
      t.push_back(x);
      x += gap(rng);
    }
    if (t.empty()) continue;
    bool ok = t.front() < 0.5 && 1.0 - t.back() < 0.5;
    for (std::size_t k = 0; ok && k + 1 < t.size(); ++k) ok = t[k + 1] - t[k] < 0.5;
    open += ok;
  }
  const double p = double(open) / n;
  CHECK(std::abs(f.mean - p) < 4 * std::hypot(f.std_error, std::sqrt(p * (1 - p) / n)));

  const auto [lo, hi] = GapBracket(0.5, 100.0, std::log(200.0) / 100.0);
  CHECK(lo <= hi);
  CHECK(hi <= 1.0);
  const BondEstimate g = EdgeSurvivalFrequency(0.5, 100.0, std::log(200.0) / 100.0, 4000, 5);
  CHECK(g.mean >= lo - 3 * g.std_error);
  CHECK(g.mean <= hi + 3 * g.std_error);
}

TEST_CASE("gap model percolation limits") {
  SegmentSystem sys;
  sys.window = BoxWindow::Centered(6.0);
  for (int i = -3; i <= 3; ++i) sys.AddVertex({double(i), 0, 0});
  for (std::uint32_t i = 0; i + 1 < 7; ++i) sys.AddEdge(i, i + 1);
  CHECK(GapModelTheta(sys, 0.0, 0.5, 4.0, 50, 1).mean == 0.0);
  CHECK(GapModelTheta(sys, 200.0, 0.5, 4.0, 50, 1).mean == 1.0);
}
