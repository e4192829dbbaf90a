#include "coxperc/measures.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>
#include <numeric>

#include "coxperc/rng.hpp"

namespace coxperc {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void RequireNonNegative(double v, const char* what) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw Error(ErrorKind::kParameter, std::string(what) + " must be finite and >= 0");
  }
}

void RequirePositive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw Error(ErrorKind::kParameter, std::string(what) + " must be finite and > 0");
  }
}

std::uint64_t Fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t HashDouble(std::uint64_t h, double v) { return Fnv1a(h, &v, sizeof v); }

std::int64_t FloorDiv(double x, double pitch) { return static_cast<std::int64_t>(std::floor(x / pitch)); }

// Cell index range [first, last] of lattice cells meeting [lo, hi].
std::pair<std::int64_t, std::int64_t> CellRange(double lo, double hi, double pitch) {
  const std::int64_t first = FloorDiv(lo, pitch);
  std::int64_t last = static_cast<std::int64_t>(std::ceil(hi / pitch)) - 1;
  return {first, std::max(first, last)};
}

DensityGrid EmptyGrid(const BoxWindow& window, double pitch) {
  DensityGrid g;
  g.pitch = pitch;
  g.dim = window.dim;
  for (int k = 0; k < 3; ++k) {
    if (k < window.dim) {
      const auto [first, last] = CellRange(window.lo(k), window.hi(k), pitch);
      g.first_cell[k] = first;
      g.count[k] = last - first + 1;
    } else {
      g.first_cell[k] = 0;
      g.count[k] = 1;
    }
  }
  g.values.assign(static_cast<std::size_t>(g.count[0] * g.count[1] * g.count[2]), 0.0);
  return g;
}

// Cell averages of the field from supersampled coverage counts. Shot noise
// adds every covering source; Boolean only needs the covered indicator.
DensityGrid RasterizeBalls(const BoxWindow& window, double pitch, std::span<const Point> sources,
                           double radius, bool additive) {
  DensityGrid g = EmptyGrid(window, pitch);
  const int s = window.dim == 2 ? 4 : 2;
  const double sub = pitch / s;
  std::array<std::int64_t, 3> sub_first{}, sub_count{1, 1, 1};
  for (int k = 0; k < window.dim; ++k) {
    sub_first[k] = g.first_cell[k] * s;
    sub_count[k] = g.count[k] * s;
  }
  std::vector<std::uint32_t> cover(static_cast<std::size_t>(sub_count[0] * sub_count[1] * sub_count[2]), 0);
  const double r2 = radius * radius;
  for (const Point& c : sources) {
    std::array<std::int64_t, 3> lo{0, 0, 0}, hi{0, 0, 0};
    bool empty = false;
    for (int k = 0; k < window.dim; ++k) {
      // Sub-point j sits at (j + 0.5) * sub.
      lo[k] = std::max<std::int64_t>(sub_first[k],
                                     static_cast<std::int64_t>(std::ceil((c[k] - radius) / sub - 0.5)));
      hi[k] = std::min<std::int64_t>(sub_first[k] + sub_count[k] - 1,
                                     static_cast<std::int64_t>(std::floor((c[k] + radius) / sub - 0.5)));
      if (lo[k] > hi[k]) empty = true;
    }
    if (empty) continue;
    for (std::int64_t iz = lo[2]; iz <= hi[2]; ++iz) {
      const double dz = window.dim == 3 ? (static_cast<double>(iz) + 0.5) * sub - c.z : 0.0;
      for (std::int64_t iy = lo[1]; iy <= hi[1]; ++iy) {
        const double dy = (static_cast<double>(iy) + 0.5) * sub - c.y;
        for (std::int64_t ix = lo[0]; ix <= hi[0]; ++ix) {
          const double dx = (static_cast<double>(ix) + 0.5) * sub - c.x;
          if (dx * dx + dy * dy + dz * dz > r2) continue;
          const std::size_t flat = static_cast<std::size_t>(
              ((iz - sub_first[2]) * sub_count[1] + (iy - sub_first[1])) * sub_count[0] + (ix - sub_first[0]));
          if (additive) {
            ++cover[flat];
          } else {
            cover[flat] = 1;
          }
        }
      }
    }
  }
  const double per_cell = std::pow(static_cast<double>(s), window.dim);
  for (std::int64_t cz = 0; cz < g.count[2]; ++cz) {
    for (std::int64_t cy = 0; cy < g.count[1]; ++cy) {
      for (std::int64_t cx = 0; cx < g.count[0]; ++cx) {
        std::uint64_t total = 0;
        const std::int64_t sz_n = window.dim == 3 ? s : 1;
        for (std::int64_t jz = 0; jz < sz_n; ++jz) {
          for (std::int64_t jy = 0; jy < s; ++jy) {
            for (std::int64_t jx = 0; jx < s; ++jx) {
              const std::int64_t iz = window.dim == 3 ? cz * s + jz : 0;
              const std::size_t flat = static_cast<std::size_t>(
                  (iz * sub_count[1] + cy * s + jy) * sub_count[0] + cx * s + jx);
              total += cover[flat];
            }
          }
        }
        g.values[static_cast<std::size_t>((cz * g.count[1] + cy) * g.count[0] + cx)] =
            static_cast<double>(total) / per_cell;
      }
    }
  }
  return g;
}

std::optional<std::array<std::int64_t, 3>> ClampedRange(const DensityGrid& g, const BoxWindow& box, int axis) {
  const auto [first, last] = CellRange(box.lo(axis), box.hi(axis), g.pitch);
  const std::int64_t lo = std::max(first, g.first_cell[axis]);
  const std::int64_t hi = std::min(last, g.first_cell[axis] + g.count[axis] - 1);
  if (lo > hi) return std::nullopt;
  return std::array<std::int64_t, 3>{lo, hi, 0};
}

template <typename Fn>
void ForEachCellIn(const DensityGrid& g, const BoxWindow& box, Fn&& fn) {
  std::array<std::int64_t, 3> lo{0, 0, 0}, hi{0, 0, 0};
  for (int k = 0; k < g.dim; ++k) {
    const auto r = ClampedRange(g, box, k);
    if (!r) return;
    lo[k] = (*r)[0];
    hi[k] = (*r)[1];
  }
  for (std::int64_t z = lo[2]; z <= hi[2]; ++z) {
    for (std::int64_t y = lo[1]; y <= hi[1]; ++y) {
      for (std::int64_t x = lo[0]; x <= hi[0]; ++x) fn(std::array<std::int64_t, 3>{x, y, z});
    }
  }
}

void RequireInside(const MeasureRealization& real, const BoxWindow& box) {
  if (box.dim != real.window.dim) throw Error(ErrorKind::kParameter, "box dimension differs from window");
  if (!real.window.ContainsBox(box)) {
    throw Error(ErrorKind::kOutOfWindow, "query region exceeds the realization window");
  }
}

double TessellationIntensity(const MeasureSpec& spec) {
  if (const auto* v = std::get_if<VoronoiEdges>(&spec.family)) return v->seed_intensity;
  if (const auto* d = std::get_if<DelaunayEdges>(&spec.family)) return d->seed_intensity;
  return 0.0;
}

// Nearest-seed distance sup over a 65^d lattice of test points in `window`.
double NearestSeedSup(std::span<const Point> seeds, const BoxWindow& window, double cell) {
  if (seeds.empty()) return std::numeric_limits<double>::infinity();
  const GridIndex index(seeds, cell, window.dim);
  constexpr int kSteps = 64;
  const double step = window.side / kSteps;
  double sup = 0.0;
  const int zn = window.dim == 3 ? kSteps : 0;
  for (int iz = 0; iz <= zn; ++iz) {
    for (int iy = 0; iy <= kSteps; ++iy) {
      for (int ix = 0; ix <= kSteps; ++ix) {
        Point p{window.lo(0) + ix * step, window.lo(1) + iy * step, 0.0};
        if (window.dim == 3) p.z = window.lo(2) + iz * step;
        const auto j = index.Nearest(p);
        sup = std::max(sup, Distance(p, seeds[*j]));
      }
    }
  }
  return sup;
}

}  // namespace

std::string MeasureSpec::Kind() const {
  return std::visit(Overloaded{
                        [](const ShotNoise&) { return std::string("shot_noise"); },
                        [](const ModulatedBoolean&) { return std::string("boolean"); },
                        [](const VoronoiEdges&) { return std::string("voronoi"); },
                        [](const DelaunayEdges&) { return std::string("delaunay"); },
                        [](const PoissonLines&) { return std::string("lines"); },
                        [](const ConstantLebesgue&) { return std::string("constant"); },
                    },
                    family);
}

bool MeasureSpec::IsSingular() const {
  return std::holds_alternative<VoronoiEdges>(family) || std::holds_alternative<DelaunayEdges>(family) ||
         std::holds_alternative<PoissonLines>(family);
}

void MeasureSpec::Validate() const {
  if (dim != 2 && dim != 3) throw Error(ErrorKind::kUnsupportedDimension, "dimension must be 2 or 3");
  if (IsSingular() && dim != 2) {
    throw Error(ErrorKind::kUnsupportedDimension, "tessellation measures are planar only");
  }
  RequireNonNegative(normalization, "normalization");
  std::visit(Overloaded{
                 [](const ShotNoise& s) {
                   RequirePositive(s.kernel_radius, "kernel_radius");
                   RequireNonNegative(s.kernel_height, "kernel_height");
                   RequireNonNegative(s.center_intensity, "center_intensity");
                 },
                 [](const ModulatedBoolean& b) {
                   RequirePositive(b.grain_radius, "grain_radius");
                   RequireNonNegative(b.grain_intensity, "grain_intensity");
                   RequireNonNegative(b.inside, "inside");
                   RequireNonNegative(b.outside, "outside");
                 },
                 [](const VoronoiEdges& v) { RequireNonNegative(v.seed_intensity, "seed_intensity"); },
                 [](const DelaunayEdges& d) { RequireNonNegative(d.seed_intensity, "seed_intensity"); },
                 [](const PoissonLines& l) { RequireNonNegative(l.line_intensity, "line_intensity"); },
                 [](const ConstantLebesgue& c) { RequireNonNegative(c.density, "density"); },
             },
             family);
}

std::uint64_t MeasureSpec::FamilyHash() const {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  const std::string kind = Kind();
  h = Fnv1a(h, kind.data(), kind.size());
  h = Fnv1a(h, &dim, sizeof dim);
  std::visit(Overloaded{
                 [&](const ShotNoise& s) {
                   h = HashDouble(HashDouble(HashDouble(h, s.kernel_radius), s.kernel_height), s.center_intensity);
                 },
                 [&](const ModulatedBoolean& b) {
                   h = HashDouble(HashDouble(HashDouble(HashDouble(h, b.grain_radius), b.grain_intensity), b.inside),
                                  b.outside);
                 },
                 [&](const VoronoiEdges& v) { h = HashDouble(h, v.seed_intensity); },
                 [&](const DelaunayEdges& d) { h = HashDouble(h, d.seed_intensity); },
                 [&](const PoissonLines& l) { h = HashDouble(h, l.line_intensity); },
                 [&](const ConstantLebesgue& c) { h = HashDouble(h, c.density); },
             },
             family);
  return h;
}

double MeasureSpec::DefaultMargin() const {
  return std::visit(Overloaded{
                        [](const ShotNoise& s) { return s.kernel_radius; },
                        [](const ModulatedBoolean& b) { return b.grain_radius; },
                        [](const VoronoiEdges& v) { return v.seed_intensity > 0 ? 6.0 / std::sqrt(v.seed_intensity) : 0.0; },
                        [](const DelaunayEdges& d) { return d.seed_intensity > 0 ? 6.0 / std::sqrt(d.seed_intensity) : 0.0; },
                        [](const PoissonLines&) { return 0.0; },
                        [](const ConstantLebesgue&) { return 0.0; },
                    },
                    family);
}

double MeasureSpec::DefaultPitch() const {
  if (const auto* s = std::get_if<ShotNoise>(&family)) return s->kernel_radius / 8.0;
  if (const auto* b = std::get_if<ModulatedBoolean>(&family)) return b->grain_radius / 8.0;
  return 0.0;
}

std::optional<double> AnalyticMeanMass(const MeasureSpec& spec) {
  return std::visit(Overloaded{
                        [&](const ShotNoise& s) -> std::optional<double> {
                          return s.center_intensity * s.kernel_height * BallVolume(spec.dim, s.kernel_radius);
                        },
                        [&](const ModulatedBoolean& b) -> std::optional<double> {
                          const double p = 1.0 - std::exp(-b.grain_intensity * BallVolume(spec.dim, b.grain_radius));
                          return p * b.inside + (1.0 - p) * b.outside;
                        },
                        [](const VoronoiEdges& v) -> std::optional<double> { return 2.0 * std::sqrt(v.seed_intensity); },
                        [](const DelaunayEdges& d) -> std::optional<double> {
                          return 32.0 / (3.0 * std::numbers::pi) * std::sqrt(d.seed_intensity);
                        },
                        [](const PoissonLines& l) -> std::optional<double> { return l.line_intensity; },
                        [](const ConstantLebesgue& c) -> std::optional<double> { return c.density; },
                    },
                    spec.family);
}

MeasureSpec WithTargetMass(MeasureSpec spec, double target, double raw_mean) {
  RequireNonNegative(target, "target mass");
  RequirePositive(raw_mean, "raw mean mass");
  spec.normalization = target / raw_mean;
  return spec;
}

double DensityGrid::At(Point p) const {
  if (uniform) return *uniform;
  std::array<std::int64_t, 3> cell{0, 0, 0};
  for (int k = 0; k < dim; ++k) {
    cell[k] = FloorDiv(p[k], pitch);
    if (cell[k] < first_cell[k] || cell[k] >= first_cell[k] + count[k]) return 0.0;
  }
  return values[Flat(cell)];
}

BoxWindow DensityGrid::CellBox(const std::array<std::int64_t, 3>& cell) const {
  Point c;
  for (int k = 0; k < dim; ++k) c[k] = (static_cast<double>(cell[k]) + 0.5) * pitch;
  return BoxWindow(c, pitch, dim);
}

std::size_t DensityGrid::Flat(const std::array<std::int64_t, 3>& cell) const {
  const std::int64_t z = dim == 3 ? cell[2] - first_cell[2] : 0;
  return static_cast<std::size_t>((z * count[1] + (cell[1] - first_cell[1])) * count[0] + (cell[0] - first_cell[0]));
}

bool MeasureRealization::IsZero() const {
  if (spec.normalization == 0.0) return true;
  if (density) {
    if (density->uniform) return *density->uniform == 0.0;
    return std::all_of(density->values.begin(), density->values.end(), [](double v) { return v == 0.0; });
  }
  if (segments) return segments->edges.empty() || segment_weight == 0.0;
  return true;
}

double MeasureRealization::FieldAt(Point p) const {
  if (!density) throw Error(ErrorKind::kParameter, "field value requested for a singular measure");
  if (density->uniform) return *density->uniform;
  if (const auto* s = std::get_if<ShotNoise>(&spec.family)) {
    const double r2 = s->kernel_radius * s->kernel_radius;
    std::size_t hits = 0;
    for (const Point& c : sources) hits += Norm2(p - c) <= r2 ? 1 : 0;
    return spec.normalization * s->kernel_height * static_cast<double>(hits);
  }
  if (const auto* b = std::get_if<ModulatedBoolean>(&spec.family)) {
    const double r2 = b->grain_radius * b->grain_radius;
    const bool covered = std::any_of(sources.begin(), sources.end(), [&](const Point& c) { return Norm2(p - c) <= r2; });
    return spec.normalization * (covered ? b->inside : b->outside);
  }
  return density->At(p);
}

MeasureRealization SampleMeasure(const MeasureSpec& spec, const BoxWindow& window, std::uint64_t seed) {
  spec.Validate();
  if (window.dim != spec.dim) throw Error(ErrorKind::kParameter, "window dimension differs from spec");
  MeasureRealization real;
  real.spec = spec;
  real.window = window;
  real.seed = seed;
  real.margin = spec.DefaultMargin();
  const std::uint64_t key = StreamKey({seed, Tag(Stream::kMeasure)});

  std::visit(Overloaded{
                 [&](const ShotNoise& s) {
                   real.sources = PoissonSeeds(s.center_intensity, window.Dilated(s.kernel_radius), key);
                   real.density = RasterizeBalls(window, spec.DefaultPitch(), real.sources, s.kernel_radius, true);
                   for (double& v : real.density->values) v *= spec.normalization * s.kernel_height;
                 },
                 [&](const ModulatedBoolean& b) {
                   real.sources = PoissonSeeds(b.grain_intensity, window.Dilated(b.grain_radius), key);
                   real.density = RasterizeBalls(window, spec.DefaultPitch(), real.sources, b.grain_radius, false);
                   for (double& v : real.density->values) {
                     v = spec.normalization * (b.outside + (b.inside - b.outside) * v);
                   }
                 },
                 [&](const VoronoiEdges& v) {
                   const auto seeds = PoissonSeeds(v.seed_intensity, window.Dilated(real.margin), key);
                   if (seeds.size() < 2) {
                     real.segments = SegmentSystem{};
                     real.segments->window = window;
                   } else {
                     real.segments = VoronoiSegments(seeds, window);
                   }
                 },
                 [&](const DelaunayEdges& d) {
                   const auto seeds = PoissonSeeds(d.seed_intensity, window.Dilated(real.margin), key);
                   try {
                     real.segments = DelaunaySegments(seeds, window);
                   } catch (const Error& e) {
                     if (e.kind() != ErrorKind::kDegenerateInput) throw;
                     // Fewer than three or collinear seeds: keep the path
                     // edges between consecutive seeds along the line.
                     std::vector<Point> sorted = seeds;
                     std::sort(sorted.begin(), sorted.end(), [](const Point& a, const Point& b) {
                       return a.x < b.x || (a.x == b.x && a.y < b.y);
                     });
                     real.segments = SegmentSystem{};
                     real.segments->window = window;
                     for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
                       const Segment seg(sorted[i], sorted[i + 1]);
                       const auto t = ClipToBox(seg, window);
                       if (!t) continue;
                       const auto a = real.segments->AddVertex(seg.At(t->first));
                       const auto b = real.segments->AddVertex(seg.At(t->second));
                       real.segments->AddEdge(a, b);
                     }
                   }
                 },
                 [&](const PoissonLines& l) { real.segments = LineTessellation(l.line_intensity, window, key); },
                 [&](const ConstantLebesgue& c) {
                   DensityGrid g;
                   g.dim = window.dim;
                   g.pitch = window.side;
                   g.uniform = spec.normalization * c.density;
                   real.density = g;
                 },
             },
             spec.family);
  if (real.segments) real.segment_weight = spec.normalization;
  return real;
}

double MeasureOfBox(const MeasureRealization& real, const BoxWindow& box) {
  RequireInside(real, box);
  if (real.segments) {
    double total = 0.0;
    for (const auto& e : real.segments->edges) total += ClippedLength(e.seg, box);
    return real.segment_weight * total;
  }
  const DensityGrid& g = *real.density;
  if (g.uniform) return *g.uniform * box.volume();
  double total = 0.0;
  ForEachCellIn(g, box, [&](const std::array<std::int64_t, 3>& cell) {
    const double v = g.values[g.Flat(cell)];
    if (v != 0.0) total += v * OverlapVolume(g.CellBox(cell), box);
  });
  return total;
}

double MeasureOfBall(const MeasureRealization& real, Point center, double radius) {
  RequireNonNegative(radius, "radius");
  const BoxWindow bound(center, std::max(2.0 * radius, 1e-300), real.window.dim);
  RequireInside(real, bound);
  if (radius == 0.0) return 0.0;
  if (real.segments) {
    double total = 0.0;
    for (const auto& e : real.segments->edges) total += ClippedLengthInBall(e.seg, center, radius);
    return real.segment_weight * total;
  }
  const DensityGrid& g = *real.density;
  if (g.uniform) return *g.uniform * BallVolume(real.window.dim, radius);
  const double cell_volume = std::pow(g.pitch, g.dim);
  const double r2 = radius * radius;
  double total = 0.0;
  ForEachCellIn(g, bound, [&](const std::array<std::int64_t, 3>& cell) {
    const BoxWindow cb = g.CellBox(cell);
    if (Norm2(cb.center - center) <= r2) total += g.values[g.Flat(cell)] * cell_volume;
  });
  return total;
}

PalmDraw DrawPalm(const MeasureRealization& real, const BoxWindow& unit_box, std::uint64_t seed) {
  PalmDraw out;
  out.weight = MeasureOfBox(real, unit_box);
  if (!(out.weight > 0.0)) {
    out.weight = 0.0;
    return out;
  }
  Rng rng({seed, Tag(Stream::kPalm)});
  if (real.segments) {
    struct Piece {
      std::size_t edge;
      double t0, t1, mass;
    };
    std::vector<Piece> pieces;
    double total = 0.0;
    for (std::size_t i = 0; i < real.segments->edges.size(); ++i) {
      const Segment& seg = real.segments->edges[i].seg;
      const auto t = ClipToBox(seg, unit_box);
      if (!t) continue;
      const double mass = (t->second - t->first) * seg.length;
      if (mass <= 0.0) continue;
      total += mass;
      pieces.push_back({i, t->first, t->second, total});
    }
    if (pieces.empty()) {
      out.weight = 0.0;
      return out;
    }
    const double u = rng.Uniform() * total;
    auto it = std::upper_bound(pieces.begin(), pieces.end(), u, [](double x, const Piece& p) { return x < p.mass; });
    if (it == pieces.end()) --it;
    const double t = rng.Uniform(it->t0, it->t1);
    out.edge = it->edge;
    out.edge_param = t;
    out.shift = real.segments->edges[it->edge].seg.At(t);
    return out;
  }
  const DensityGrid& g = *real.density;
  auto uniform_in = [&](const BoxWindow& b) {
    Point p;
    for (int k = 0; k < b.dim; ++k) p[k] = rng.Uniform(b.lo(k), b.hi(k));
    return p;
  };
  auto intersect = [&](const BoxWindow& a, const BoxWindow& b) {
    // Axis-wise intersection of two cubes is a box; return lo/hi pairs.
    std::array<std::pair<double, double>, 3> r{};
    for (int k = 0; k < a.dim; ++k) r[k] = {std::max(a.lo(k), b.lo(k)), std::min(a.hi(k), b.hi(k))};
    return r;
  };
  if (g.uniform) {
    out.shift = uniform_in(unit_box);
    return out;
  }
  std::vector<std::pair<std::array<std::int64_t, 3>, double>> cells;
  double total = 0.0;
  ForEachCellIn(g, unit_box, [&](const std::array<std::int64_t, 3>& cell) {
    const double m = g.values[g.Flat(cell)] * OverlapVolume(g.CellBox(cell), unit_box);
    if (m <= 0.0) return;
    total += m;
    cells.emplace_back(cell, total);
  });
  const double u = rng.Uniform() * total;
  auto it = std::upper_bound(cells.begin(), cells.end(), u,
                             [](double x, const std::pair<std::array<std::int64_t, 3>, double>& c) { return x < c.second; });
  if (it == cells.end()) --it;
  const auto r = intersect(g.CellBox(it->first), unit_box);
  Point p;
  for (int k = 0; k < g.dim; ++k) p[k] = rng.Uniform(r[k].first, r[k].second);
  out.shift = p;
  return out;
}

double StabilizationRadiusSupForSeeds(std::span<const Point> seeds, const BoxWindow& window, double cell) {
  return NearestSeedSup(seeds, window, cell);
}

double StabilizationRadiusSup(const MeasureSpec& spec, const BoxWindow& window, std::uint64_t seed) {
  spec.Validate();
  return std::visit(Overloaded{
                        [](const ShotNoise& s) { return 2.0 * s.kernel_radius; },
                        [](const ModulatedBoolean& b) { return 2.0 * b.grain_radius; },
                        [](const ConstantLebesgue&) { return 0.0; },
                        [](const PoissonLines&) -> double {
                          throw Error(ErrorKind::kUnsupportedDiagnostic,
                                      "no stabilization radius is defined for line tessellations");
                        },
                        [&](const auto&) -> double {
                          const double ls = TessellationIntensity(spec);
                          if (ls <= 0.0) return std::numeric_limits<double>::infinity();
                          const double margin = std::max(6.0 / std::sqrt(ls), window.side);
                          const auto seeds =
                              PoissonSeeds(ls, window.Dilated(margin), StreamKey({seed, Tag(Stream::kDiagnostic)}));
                          return NearestSeedSup(seeds, window, 1.0 / std::sqrt(ls));
                        },
                    },
                    spec.family);
}

StabDiagnostics DiagnoseStabilization(const MeasureSpec& spec, double n, int replicates, std::uint64_t seed) {
  RequirePositive(n, "n");
  if (replicates <= 0) throw Error(ErrorKind::kParameter, "replicates must be > 0");
  StabDiagnostics out;
  out.n = n;
  out.replicates = replicates;
  const BoxWindow qn = BoxWindow::Centered(n, spec.dim);
  int hits = 0;
  for (int i = 0; i < replicates; ++i) {
    const double sup = StabilizationRadiusSup(spec, qn, StreamKey({seed, static_cast<std::uint64_t>(i)}));
    hits += sup < n ? 1 : 0;
  }
  const double m = replicates;
  const double p = hits / m;
  out.empirical_prob = p;
  out.std_error = std::sqrt(p * (1.0 - p) / m + 1.0 / (4.0 * m * m)) / (1.0 + 1.0 / m);
  const double ls = TessellationIntensity(spec);
  if (ls > 0.0) {
    const double d = spec.dim;
    out.theory_bound = std::max(0.0, 1.0 - std::pow(d, d) * std::exp(-ls * std::pow(n / d, d)));
  } else {
    out.theory_bound = StabilizationRadiusSup(spec, qn, seed) < n ? 1.0 : 0.0;
  }
  return out;
}

AecResult AecCheck(const MeasureRealization& real, double n) {
  RequirePositive(n, "n");
  const int dim = real.window.dim;
  const BoxWindow q2n(real.window.center, 2.0 * n, dim);
  RequireInside(real, q2n);
  AecResult out;
  if (real.IsZero()) return out;

  const int cells = dim == 2 ? 256 : 64;
  const double pitch = q2n.side / cells;
  const std::int64_t zc = dim == 3 ? cells : 1;
  std::vector<std::uint8_t> support(static_cast<std::size_t>(cells) * cells * zc, 0);
  auto flat = [&](std::int64_t x, std::int64_t y, std::int64_t z) {
    return static_cast<std::size_t>((z * cells + y) * cells + x);
  };
  auto cell_of = [&](double v, int axis) {
    return std::clamp<std::int64_t>(FloorDiv(v - q2n.lo(axis), pitch), 0, cells - 1);
  };

  if (real.segments) {
    const double step = pitch / 4.0;
    for (const auto& e : real.segments->edges) {
      const auto t = ClipToBox(e.seg, q2n);
      if (!t) continue;
      const double len = (t->second - t->first) * e.seg.length;
      const auto samples = static_cast<std::int64_t>(std::ceil(len / step));
      for (std::int64_t i = 0; i <= samples; ++i) {
        const double u = t->first + (t->second - t->first) * (samples > 0 ? double(i) / samples : 0.0);
        const Point p = e.seg.At(u);
        support[flat(cell_of(p.x, 0), cell_of(p.y, 1), 0)] = 1;
      }
    }
  } else if (real.density->uniform) {
    std::fill(support.begin(), support.end(), 1);
  } else {
    const auto* boolean = std::get_if<ModulatedBoolean>(&real.spec.family);
    if (boolean && boolean->outside > 0.0) {
      std::fill(support.begin(), support.end(), 1);
    } else {
      const double radius = boolean ? boolean->grain_radius : std::get<ShotNoise>(real.spec.family).kernel_radius;
      const bool positive = boolean ? boolean->inside > 0.0 : std::get<ShotNoise>(real.spec.family).kernel_height > 0.0;
      if (positive) {
        // A cell is in the support when it meets some closed source ball.
        for (const Point& c : real.sources) {
          std::array<std::int64_t, 3> lo{0, 0, 0}, hi{0, 0, 0};
          for (int k = 0; k < dim; ++k) {
            lo[k] = cell_of(c[k] - radius, k);
            hi[k] = cell_of(c[k] + radius, k);
          }
          for (std::int64_t z = lo[2]; z <= hi[2]; ++z) {
            for (std::int64_t y = lo[1]; y <= hi[1]; ++y) {
              for (std::int64_t x = lo[0]; x <= hi[0]; ++x) {
                const std::array<std::int64_t, 3> idx{x, y, z};
                double d2 = 0.0;
                for (int k = 0; k < dim; ++k) {
                  const double a = q2n.lo(k) + idx[k] * pitch;
                  const double gap = std::max({a - c[k], 0.0, c[k] - (a + pitch)});
                  d2 += gap * gap;
                }
                if (d2 <= radius * radius) support[flat(x, y, z)] = 1;
              }
            }
          }
        }
      }
    }
  }

  // Label components of the support in Q_2n (8- / 26-neighbourhood).
  std::vector<std::int32_t> label(support.size(), -1);
  std::vector<std::array<std::int64_t, 3>> stack;
  std::int32_t next = 0;
  for (std::int64_t z = 0; z < zc; ++z) {
    for (std::int64_t y = 0; y < cells; ++y) {
      for (std::int64_t x = 0; x < cells; ++x) {
        if (!support[flat(x, y, z)] || label[flat(x, y, z)] >= 0) continue;
        label[flat(x, y, z)] = next;
        stack.push_back({x, y, z});
        while (!stack.empty()) {
          const auto c = stack.back();
          stack.pop_back();
          const std::int64_t dzr = dim == 3 ? 1 : 0;
          for (std::int64_t dz = -dzr; dz <= dzr; ++dz) {
            for (std::int64_t dy = -1; dy <= 1; ++dy) {
              for (std::int64_t dx = -1; dx <= 1; ++dx) {
                const std::int64_t nx = c[0] + dx, ny = c[1] + dy, nz = c[2] + dz;
                if (nx < 0 || ny < 0 || nz < 0 || nx >= cells || ny >= cells || nz >= zc) continue;
                const std::size_t f = flat(nx, ny, nz);
                if (!support[f] || label[f] >= 0) continue;
                label[f] = next;
                stack.push_back({nx, ny, nz});
              }
            }
          }
        }
        ++next;
      }
    }
  }

  // Q_n is the central half of the lattice.
  const std::int64_t lo = cells / 4, hi = 3 * cells / 4;
  const std::int64_t zlo = dim == 3 ? lo : 0, zhi = dim == 3 ? hi : 1;
  std::int32_t seen = -1;
  bool connected = true;
  for (std::int64_t z = zlo; z < zhi; ++z) {
    for (std::int64_t y = lo; y < hi; ++y) {
      for (std::int64_t x = lo; x < hi; ++x) {
        const std::int32_t l = label[flat(x, y, z)];
        if (l < 0) continue;
        if (seen < 0) seen = l;
        if (l != seen) connected = false;
      }
    }
  }
  out.support_nonempty = seen >= 0;
  out.q_n_support_connected_in_q_2n = out.support_nonempty && connected;
  return out;
}

MassCalibration CalibrateMeanMass(const MeasureSpec& spec, int replicates, std::uint64_t seed, double window_side) {
  if (replicates < 2) throw Error(ErrorKind::kParameter, "calibration needs at least 2 replicates");
  RequirePositive(window_side, "window_side");
  MeasureSpec raw = spec;
  raw.normalization = 1.0;
  const BoxWindow window = BoxWindow::Centered(window_side, spec.dim);
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < replicates; ++i) {
    const auto real = SampleMeasure(raw, window, StreamKey({seed, Tag(Stream::kCalibration), std::uint64_t(i)}));
    const double m = MeasureOfBox(real, window) / window.volume();
    sum += m;
    sum2 += m * m;
  }
  MassCalibration out;
  out.replicates = replicates;
  out.mean = sum / replicates;
  const double var = std::max(0.0, (sum2 - replicates * out.mean * out.mean) / (replicates - 1));
  out.std_error = std::sqrt(var / replicates);
  out.analytic = AnalyticMeanMass(raw);
  return out;
}

}  // namespace coxperc
