#include "coxperc/cox.hpp"

#include <cmath>
#include <random>

#include "coxperc/rng.hpp"

namespace coxperc {
namespace {

std::int64_t PoissonCount(Rng& rng, double mean) {
  if (!(mean > 0.0)) return 0;
  return std::poisson_distribution<std::int64_t>(mean)(rng);
}

Point UniformInBall(Rng& rng, Point center, double radius, int dim) {
  for (;;) {
    Vec v{rng.Uniform(-1.0, 1.0), rng.Uniform(-1.0, 1.0), dim == 3 ? rng.Uniform(-1.0, 1.0) : 0.0};
    if (Norm2(v) <= 1.0) return center + radius * v;
  }
}

void UniformFill(PointPattern& out, Rng& rng, double intensity, const BoxWindow& box) {
  const auto n = PoissonCount(rng, intensity * box.volume());
  for (std::int64_t i = 0; i < n; ++i) {
    Point p;
    for (int k = 0; k < box.dim; ++k) p[k] = rng.Uniform(box.lo(k), box.hi(k));
    out.points.push_back(p);
  }
}

void RequireLambda(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error(ErrorKind::kParameter, "lambda must be finite and >= 0");
}

}  // namespace

PointPattern SamplePoisson(double rho, const BoxWindow& window, std::uint64_t seed) {
  RequireLambda(rho);
  PointPattern out;
  out.window = window;
  out.intensity = rho;
  out.seed = seed;
  Rng rng({seed, Tag(Stream::kPoisson)});
  UniformFill(out, rng, rho, window);
  return out;
}

PointPattern SampleCox(const MeasureRealization& real, double lambda, std::uint64_t seed,
                       std::optional<BoxWindow> region) {
  RequireLambda(lambda);
  const BoxWindow box = region.value_or(real.window);
  if (box.dim != real.window.dim) throw Error(ErrorKind::kParameter, "region dimension differs from window");
  if (!real.window.ContainsBox(box)) throw Error(ErrorKind::kOutOfWindow, "region exceeds the realization window");
  PointPattern out;
  out.window = box;
  out.intensity = lambda;
  out.seed = seed;
  if (lambda == 0.0 || real.IsZero()) return out;
  const double scale = lambda * real.spec.normalization;

  if (real.segments) {
    const double rate = lambda * real.segment_weight;
    const auto& edges = real.segments->edges;
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const Segment& seg = edges[i].seg;
      const auto t = ClipToBox(seg, box);
      if (!t) continue;
      Rng rng({seed, Tag(Stream::kCox), static_cast<std::uint64_t>(i)});
      const auto n = PoissonCount(rng, rate * (t->second - t->first) * seg.length);
      for (std::int64_t k = 0; k < n; ++k) {
        const double u = rng.Uniform(t->first, t->second);
        out.points.push_back(seg.At(u));
        out.edge.push_back(static_cast<std::uint32_t>(i));
        out.edge_param.push_back(u);
      }
    }
    return out;
  }

  const int dim = real.window.dim;
  if (const auto* c = std::get_if<ConstantLebesgue>(&real.spec.family)) {
    Rng rng({seed, Tag(Stream::kCox)});
    UniformFill(out, rng, scale * c->density, box);
    return out;
  }
  if (const auto* s = std::get_if<ShotNoise>(&real.spec.family)) {
    const double mean = scale * s->kernel_height * BallVolume(dim, s->kernel_radius);
    for (std::size_t j = 0; j < real.sources.size(); ++j) {
      Rng rng({seed, Tag(Stream::kCox), static_cast<std::uint64_t>(j)});
      const auto n = PoissonCount(rng, mean);
      for (std::int64_t k = 0; k < n; ++k) {
        const Point p = UniformInBall(rng, real.sources[j], s->kernel_radius, dim);
        if (box.Contains(p)) out.points.push_back(p);
      }
    }
    return out;
  }
  const auto& b = std::get<ModulatedBoolean>(real.spec.family);
  const double radius = b.grain_radius;
  const double r2 = radius * radius;
  const GridIndex grains(real.sources, radius, dim);
  // First grain (lowest index) covering p, or sources.size() if none.
  auto first_cover = [&](Point p) {
    std::size_t first = real.sources.size();
    grains.ForEachWithin(p, radius * (1.0 + 1e-12), [&](std::uint32_t j) {
      if (Norm2(real.sources[j] - p) <= r2) first = std::min<std::size_t>(first, j);
    });
    return first;
  };
  const std::uint64_t base_stream = real.sources.size();
  const double low = std::min(b.inside, b.outside);
  const double excess = std::abs(b.inside - b.outside);
  {
    Rng rng({seed, Tag(Stream::kCox), base_stream});
    UniformFill(out, rng, scale * low, box);
  }
  if (excess == 0.0) return out;
  if (b.inside >= b.outside) {
    // Each grain contributes the part of its ball not covered by a
    // lower-indexed grain, so the union is covered exactly once.
    const double mean = scale * excess * BallVolume(dim, radius);
    for (std::size_t j = 0; j < real.sources.size(); ++j) {
      Rng rng({seed, Tag(Stream::kCox), static_cast<std::uint64_t>(j)});
      const auto n = PoissonCount(rng, mean);
      for (std::int64_t k = 0; k < n; ++k) {
        const Point p = UniformInBall(rng, real.sources[j], radius, dim);
        if (box.Contains(p) && first_cover(p) == j) out.points.push_back(p);
      }
    }
  } else {
    PointPattern extra;
    Rng rng({seed, Tag(Stream::kCox), base_stream + 1});
    UniformFill(extra, rng, scale * excess, box);
    for (const Point& p : extra.points) {
      if (first_cover(p) == real.sources.size()) out.points.push_back(p);
    }
  }
  return out;
}

PalmEnvironment SamplePalmEnvironment(const MeasureSpec& spec, double side, std::uint64_t seed) {
  if (!(side > 0.0)) throw Error(ErrorKind::kParameter, "side must be > 0");
  PalmEnvironment env;
  env.real = SampleMeasure(spec, BoxWindow::Centered(side + 1.0, spec.dim), seed);
  env.draw = DrawPalm(env.real, BoxWindow::Centered(1.0, spec.dim), seed);
  return env;
}

PalmSample SampleCoxPalm(const PalmEnvironment& env, double lambda, double side, std::uint64_t seed) {
  RequireLambda(lambda);
  PalmSample out;
  out.environment = env.real;
  out.draw = env.draw;
  out.weight = env.draw.weight;
  const int dim = env.real.window.dim;
  out.pattern.window = BoxWindow::Centered(side, dim);
  out.pattern.intensity = lambda;
  out.pattern.seed = seed;
  out.pattern.points.push_back(Point{});
  const bool segments = env.real.segments.has_value();
  if (segments) {
    out.pattern.edge.push_back(env.draw.edge.value_or(0));
    out.pattern.edge_param.push_back(env.draw.edge_param);
  }
  if (!env.draw.shift || out.weight <= 0.0) {
    out.weight = 0.0;
    return out;
  }
  out.shift = *env.draw.shift;
  const BoxWindow region(out.shift, side, dim);
  const PointPattern cox = SampleCox(env.real, lambda, seed, region);
  for (std::size_t i = 0; i < cox.points.size(); ++i) {
    out.pattern.points.push_back(cox.points[i] - out.shift);
    if (segments) {
      out.pattern.edge.push_back(cox.edge[i]);
      out.pattern.edge_param.push_back(cox.edge_param[i]);
    }
  }
  return out;
}

PalmSample SampleCoxPalm(const MeasureSpec& spec, double lambda, double side, std::uint64_t seed) {
  return SampleCoxPalm(SamplePalmEnvironment(spec, side, seed), lambda, side, seed);
}

double ThinningMark(std::uint64_t seed, std::size_t index) {
  return ToUnit(StreamKey({seed, Tag(Stream::kThinning), static_cast<std::uint64_t>(index)}));
}

namespace {

PointPattern Thin(const PointPattern& pattern, double target, std::uint64_t seed, bool keep_origin) {
  if (!(target >= 0.0)) throw Error(ErrorKind::kParameter, "target intensity must be >= 0");
  if (target > pattern.intensity) throw Error(ErrorKind::kParameter, "target intensity exceeds the sampled one");
  PointPattern out;
  out.window = pattern.window;
  out.intensity = target;
  out.seed = pattern.seed;
  const double keep = pattern.intensity > 0.0 ? target / pattern.intensity : 0.0;
  const bool edges = !pattern.edge.empty();
  for (std::size_t i = 0; i < pattern.points.size(); ++i) {
    const bool retained = (keep_origin && i == 0) || keep >= 1.0 || ThinningMark(seed, i) < keep;
    if (!retained) continue;
    out.points.push_back(pattern.points[i]);
    if (edges) {
      out.edge.push_back(pattern.edge[i]);
      out.edge_param.push_back(pattern.edge_param[i]);
    }
  }
  return out;
}

}  // namespace

PointPattern ThinTo(const PointPattern& pattern, double target, std::uint64_t seed) {
  return Thin(pattern, target, seed, false);
}

PointPattern ThinPalm(const PointPattern& pattern, double target, std::uint64_t seed) {
  return Thin(pattern, target, seed, true);
}

}  // namespace coxperc
