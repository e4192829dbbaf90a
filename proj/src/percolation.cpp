#include "coxperc/percolation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "coxperc/rng.hpp"

namespace coxperc {

UnionFind::UnionFind(std::size_t n) : parent_(n), rank_(n, 0), components_(n) {
  std::iota(parent_.begin(), parent_.end(), 0u);
}

std::uint32_t UnionFind::Find(std::uint32_t i) {
  while (parent_[i] != i) {
    parent_[i] = parent_[parent_[i]];
    i = parent_[i];
  }
  return i;
}

bool UnionFind::Unite(std::uint32_t a, std::uint32_t b) {
  a = Find(a);
  b = Find(b);
  if (a == b) return false;
  if (rank_[a] < rank_[b]) std::swap(a, b);
  parent_[b] = a;
  if (rank_[a] == rank_[b]) ++rank_[a];
  --components_;
  ++unions_;
  return true;
}

std::vector<std::uint32_t> GilbertGraph::ComponentOf(std::uint32_t i) const {
  std::vector<std::uint32_t> out;
  for (std::uint32_t j = 0; j < label.size(); ++j) {
    if (label[j] == label[i]) out.push_back(j);
  }
  return out;
}

GilbertGraph BuildGilbert(std::span<const Point> points, double r) {
  if (!(r > 0.0)) throw Error(ErrorKind::kParameter, "connection radius must be > 0");
  GilbertGraph g;
  g.points.assign(points.begin(), points.end());
  g.radius = r;
  const int dim = std::any_of(points.begin(), points.end(), [](const Point& p) { return p.z != 0.0; }) ? 3 : 2;
  const GridIndex index(points, r, dim);
  UnionFind uf(points.size());
  for (std::uint32_t i = 0; i < points.size(); ++i) {
    index.ForEachWithin(points[i], r, [&](std::uint32_t j) {
      if (j > i) uf.Unite(i, j);
    });
  }
  g.label.resize(points.size());
  for (std::uint32_t i = 0; i < points.size(); ++i) g.label[i] = uf.Find(i);
  g.components = uf.components();
  g.unions = uf.unions();
  return g;
}

bool OriginReachesBoundary(const GilbertGraph& graph, double a) {
  if (graph.points.empty() || !(graph.points[0] == Point{})) {
    throw Error(ErrorKind::kContractViolation, "pattern must contain the origin at index 0");
  }
  if (!(a > 4.0 * graph.radius)) throw Error(ErrorKind::kParameter, "box side must exceed 4r");
  const double level = 0.5 * (a - 2.0 * graph.radius);
  for (std::size_t i = 0; i < graph.points.size(); ++i) {
    if (graph.label[i] == graph.label[0] && SupNorm(graph.points[i]) >= level) return true;
  }
  return false;
}

double OriginReachThreshold(std::span<const Point> points, std::span<const double> marks, double r, double a) {
  if (points.empty() || !(points[0] == Point{})) {
    throw Error(ErrorKind::kContractViolation, "pattern must contain the origin at index 0");
  }
  if (marks.size() != points.size()) throw Error(ErrorKind::kParameter, "one mark per point required");
  if (!(r > 0.0)) throw Error(ErrorKind::kParameter, "connection radius must be > 0");
  if (!(a > 4.0 * r)) throw Error(ErrorKind::kParameter, "box side must exceed 4r");
  const double level = 0.5 * (a - 2.0 * r);
  const std::size_t n = points.size();

  std::vector<std::uint32_t> order(n - 1);
  std::iota(order.begin(), order.end(), 1u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t x, std::uint32_t y) {
    return marks[x] < marks[y] || (marks[x] == marks[y] && x < y);
  });

  const int dim = std::any_of(points.begin(), points.end(), [](const Point& p) { return p.z != 0.0; }) ? 3 : 2;
  const GridIndex index(points, r, dim);
  UnionFind uf(n);
  std::vector<std::uint8_t> active(n, 0), reaches(n, 0);
  auto activate = [&](std::uint32_t i) {
    active[i] = 1;
    reaches[i] = SupNorm(points[i]) >= level ? 1 : 0;
    index.ForEachWithin(points[i], r, [&](std::uint32_t j) {
      if (!active[j] || j == i) return;
      const std::uint32_t ri = uf.Find(i), rj = uf.Find(j);
      if (ri == rj) return;
      const std::uint8_t flag = reaches[ri] | reaches[rj];
      uf.Unite(ri, rj);
      reaches[uf.Find(ri)] = flag;
    });
  };
  activate(0);
  if (reaches[uf.Find(0)]) return 0.0;
  for (std::uint32_t i : order) {
    activate(i);
    if (reaches[uf.Find(0)]) return marks[i];
  }
  return 2.0;
}

BondConfig SampleBonds(const SegmentSystem& sys, double b, std::uint64_t seed) {
  if (!(b >= 0.0 && b <= 1.0)) throw Error(ErrorKind::kParameter, "b must lie in [0, 1]");
  BondConfig out;
  out.open.resize(sys.edges.size());
  for (std::size_t i = 0; i < sys.edges.size(); ++i) {
    const double p = std::pow(b, sys.edges[i].seg.length);
    out.open[i] = ToUnit(StreamKey({seed, Tag(Stream::kBonds), static_cast<std::uint64_t>(i)})) < p ? 1 : 0;
  }
  return out;
}

bool BondClusterEscapes(const SegmentSystem& sys, const std::vector<std::uint8_t>& open, std::uint32_t root,
                        Point center, double level) {
  if (open.size() != sys.edges.size()) throw Error(ErrorKind::kParameter, "one flag per edge required");
  if (root >= sys.vertices.size()) throw Error(ErrorKind::kParameter, "root vertex out of range");
  UnionFind uf(sys.vertices.size());
  for (std::size_t i = 0; i < sys.edges.size(); ++i) {
    if (open[i]) uf.Unite(sys.edges[i].u, sys.edges[i].v);
  }
  const std::uint32_t target = uf.Find(root);
  for (std::uint32_t v = 0; v < sys.vertices.size(); ++v) {
    if (SupNorm(sys.vertices[v] - center) >= level && uf.Find(v) == target) return true;
  }
  return false;
}

std::pair<SegmentSystem, std::uint32_t> SplitEdge(const SegmentSystem& sys, std::size_t edge, double t) {
  if (edge >= sys.edges.size()) throw Error(ErrorKind::kParameter, "edge index out of range");
  SegmentSystem out = sys;
  const auto e = sys.edges[edge];
  const std::uint32_t mid = out.AddVertex(e.seg.At(t));
  out.edges[edge] = {e.u, mid, Segment(e.seg.a, out.vertices[mid])};
  out.edges.push_back({mid, e.v, Segment(out.vertices[mid], e.seg.b)});
  return {std::move(out), mid};
}

std::uint32_t NearestVertex(const SegmentSystem& sys, Point p) {
  if (sys.vertices.empty()) throw Error(ErrorKind::kDegenerateInput, "segment system has no vertices");
  std::uint32_t best = 0;
  double best_d2 = Norm2(sys.vertices[0] - p);
  for (std::uint32_t v = 1; v < sys.vertices.size(); ++v) {
    const double d2 = Norm2(sys.vertices[v] - p);
    if (d2 < best_d2) {
      best = v;
      best_d2 = d2;
    }
  }
  return best;
}

namespace {

BondEstimate Proportion(int hits, int n) {
  BondEstimate out;
  out.replicates = n;
  const double m = n;
  const double p = hits / m;
  out.mean = p;
  out.std_error = std::sqrt(p * (1.0 - p) / m + 1.0 / (4.0 * m * m)) / (1.0 + 1.0 / m);
  return out;
}

}  // namespace

BondEstimate BondPercolationTheta(const SegmentSystem& sys, double b, double K, int replicates, std::uint64_t seed,
                                  double margin) {
  if (replicates <= 0) throw Error(ErrorKind::kParameter, "replicates must be > 0");
  if (sys.edges.empty()) {
    BondEstimate out = Proportion(0, replicates);
    out.flagged = true;
    return out;
  }
  const Point center = sys.window.center;
  const std::uint32_t root = NearestVertex(sys, center);
  const double level = 0.5 * (K - margin);
  int hits = 0;
  for (int i = 0; i < replicates; ++i) {
    const BondConfig bonds = SampleBonds(sys, b, StreamKey({seed, static_cast<std::uint64_t>(i)}));
    hits += BondClusterEscapes(sys, bonds.open, root, center, level) ? 1 : 0;
  }
  return Proportion(hits, replicates);
}

std::vector<std::uint8_t> GapModelOpen(const SegmentSystem& sys, std::vector<std::vector<double>> params, double r) {
  if (params.size() != sys.edges.size()) throw Error(ErrorKind::kParameter, "one parameter list per edge required");
  if (!(r > 0.0)) throw Error(ErrorKind::kParameter, "connection radius must be > 0");
  std::vector<std::uint8_t> open(sys.edges.size(), 0);
  for (std::size_t e = 0; e < sys.edges.size(); ++e) {
    auto& t = params[e];
    if (t.empty()) continue;
    std::sort(t.begin(), t.end());
    const double len = sys.edges[e].seg.length;
    bool ok = t.front() * len < r && (1.0 - t.back()) * len < r;
    for (std::size_t k = 0; ok && k + 1 < t.size(); ++k) ok = (t[k + 1] - t[k]) * len < r;
    open[e] = ok ? 1 : 0;
  }
  return open;
}

std::vector<std::vector<double>> SampleEdgePoints(const SegmentSystem& sys, double lambda, std::uint64_t seed) {
  std::vector<std::vector<double>> params(sys.edges.size());
  for (std::size_t e = 0; e < sys.edges.size(); ++e) {
    Rng rng({seed, Tag(Stream::kCox), static_cast<std::uint64_t>(e)});
    const double mean = lambda * sys.edges[e].seg.length;
    const auto n = mean > 0.0 ? std::poisson_distribution<std::int64_t>(mean)(rng) : 0;
    params[e].resize(static_cast<std::size_t>(n));
    for (double& t : params[e]) t = rng.Uniform();
  }
  return params;
}

BondEstimate GapModelTheta(const SegmentSystem& sys, double lambda, double r, double K, int replicates,
                           std::uint64_t seed, double margin) {
  if (replicates <= 0) throw Error(ErrorKind::kParameter, "replicates must be > 0");
  if (sys.edges.empty()) {
    BondEstimate out = Proportion(0, replicates);
    out.flagged = true;
    return out;
  }
  const Point center = sys.window.center;
  const std::uint32_t root = NearestVertex(sys, center);
  const double level = 0.5 * (K - margin);
  int hits = 0;
  for (int i = 0; i < replicates; ++i) {
    const auto open = GapModelOpen(sys, SampleEdgePoints(sys, lambda, StreamKey({seed, std::uint64_t(i)})), r);
    hits += BondClusterEscapes(sys, open, root, center, level) ? 1 : 0;
  }
  return Proportion(hits, replicates);
}

BondEstimate EdgeSurvivalFrequency(double length, double lambda, double r, int replicates, std::uint64_t seed) {
  if (replicates <= 0) throw Error(ErrorKind::kParameter, "replicates must be > 0");
  SegmentSystem sys;
  sys.window = BoxWindow::Centered(2.0 * length + 1.0);
  const auto a = sys.AddVertex({0.0, 0.0, 0.0});
  const auto b = sys.AddVertex({length, 0.0, 0.0});
  sys.AddEdge(a, b);
  int hits = 0;
  for (int i = 0; i < replicates; ++i) {
    hits += GapModelOpen(sys, SampleEdgePoints(sys, lambda, StreamKey({seed, std::uint64_t(i)})), r)[0];
  }
  return Proportion(hits, replicates);
}

std::pair<double, double> GapBracket(double length, double lambda, double r) {
  const double base = 1.0 - std::exp(-lambda * r);
  const double slack = std::pow(lambda, 0.75);
  return {std::pow(base, lambda * length + slack), std::min(1.0, std::pow(base, lambda * length - slack))};
}

}  // namespace coxperc
