#include "coxperc/geom.hpp"

#include <algorithm>
#include <numbers>

namespace coxperc {

const char* ToString(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParameter: return "parameter error";
    case ErrorKind::kRejectedInput: return "rejected input";
    case ErrorKind::kOutOfWindow: return "out-of-window";
    case ErrorKind::kDegenerateInput: return "degenerate input";
    case ErrorKind::kUnsupportedDimension: return "unsupported dimension";
    case ErrorKind::kUnsupportedDiagnostic: return "unsupported diagnostic";
    case ErrorKind::kContractViolation: return "contract violation";
    case ErrorKind::kUndefinedEstimate: return "undefined estimate";
    case ErrorKind::kConfig: return "config error";
  }
  return "error";
}

double BallVolume(int dim, double radius) {
  if (dim == 2) return std::numbers::pi * radius * radius;
  if (dim == 3) return 4.0 / 3.0 * std::numbers::pi * radius * radius * radius;
  throw Error(ErrorKind::kUnsupportedDimension, "dimension must be 2 or 3");
}

BoxWindow::BoxWindow(Point c, double s, int d) : center(c), side(s), dim(d) {
  if (!(s > 0.0) || !std::isfinite(s)) {
    throw Error(ErrorKind::kParameter, "window side must be positive");
  }
  if (d != 2 && d != 3) {
    throw Error(ErrorKind::kUnsupportedDimension, "dimension must be 2 or 3");
  }
  if (d == 2) center.z = 0.0;
}

bool BoxWindow::Contains(Point p) const {
  for (int k = 0; k < dim; ++k) {
    if (p[k] < lo(k) || p[k] > hi(k)) return false;
  }
  return true;
}

bool BoxWindow::ContainsBox(const BoxWindow& other) const {
  const double slack = 1e-12 * std::max(1.0, side);
  for (int k = 0; k < dim; ++k) {
    if (other.lo(k) < lo(k) - slack || other.hi(k) > hi(k) + slack) return false;
  }
  return true;
}

std::optional<std::pair<double, double>> ClipToBox(const Segment& seg, const BoxWindow& box) {
  double t0 = 0.0;
  double t1 = 1.0;
  const Vec d = seg.b - seg.a;
  for (int k = 0; k < box.dim; ++k) {
    const double lo = box.lo(k) - seg.a[k];
    const double hi = box.hi(k) - seg.a[k];
    if (d[k] == 0.0) {
      if (lo > 0.0 || hi < 0.0) return std::nullopt;
      continue;
    }
    double ta = lo / d[k];
    double tb = hi / d[k];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 >= t1) return std::nullopt;
  }
  return std::make_pair(t0, t1);
}

double ClippedLength(const Segment& seg, const BoxWindow& box) {
  const auto t = ClipToBox(seg, box);
  return t ? (t->second - t->first) * seg.length : 0.0;
}

double ClippedLengthInBall(const Segment& seg, Point center, double radius) {
  if (seg.length <= 0.0) return 0.0;
  const Vec d = seg.b - seg.a;
  const Vec f = seg.a - center;
  const double a = Dot(d, d);
  const double b = 2.0 * Dot(f, d);
  const double c = Dot(f, f) - radius * radius;
  const double disc = b * b - 4.0 * a * c;
  if (disc <= 0.0) return 0.0;
  const double s = std::sqrt(disc);
  const double t0 = std::max(0.0, (-b - s) / (2.0 * a));
  const double t1 = std::min(1.0, (-b + s) / (2.0 * a));
  return t1 > t0 ? (t1 - t0) * seg.length : 0.0;
}

double OverlapVolume(const BoxWindow& a, const BoxWindow& b) {
  double v = 1.0;
  for (int k = 0; k < a.dim; ++k) {
    const double w = std::min(a.hi(k), b.hi(k)) - std::max(a.lo(k), b.lo(k));
    if (w <= 0.0) return 0.0;
    v *= w;
  }
  return v;
}

std::size_t GridIndex::CellHash::operator()(const std::array<std::int64_t, 3>& c) const {
  std::uint64_t h = 0x9E3779B97F4A7C15ULL;
  for (std::int64_t v : c) {
    h ^= static_cast<std::uint64_t>(v) + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
  }
  return static_cast<std::size_t>(h);
}

GridIndex::GridIndex(std::span<const Point> points, double cell_size, int dim)
    : points_(points.begin(), points.end()), cell_size_(cell_size), dim_(dim) {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
    throw Error(ErrorKind::kParameter, "cell_size must be positive");
  }
  if (dim != 2 && dim != 3) {
    throw Error(ErrorKind::kUnsupportedDimension, "dimension must be 2 or 3");
  }
  for (const Point& p : points_) {
    if (!IsFinite(p)) throw Error(ErrorKind::kRejectedInput, "non-finite coordinate");
  }
  if (points_.empty()) return;

  std::vector<std::array<std::int64_t, 3>> cells(points_.size());
  std::array<std::int64_t, 3> max_cell{};
  for (std::size_t i = 0; i < points_.size(); ++i) {
    cells[i] = CellOf(points_[i]);
    for (int k = 0; k < 3; ++k) {
      if (i == 0 || cells[i][k] < min_cell_[k]) min_cell_[k] = cells[i][k];
      if (i == 0 || cells[i][k] > max_cell[k]) max_cell[k] = cells[i][k];
    }
  }
  double dense_size = 1.0;
  for (int k = 0; k < 3; ++k) {
    extent_[k] = max_cell[k] - min_cell_[k] + 1;
    dense_size *= static_cast<double>(extent_[k]);
  }
  dense_ = dense_size <= std::max<double>(4.0 * static_cast<double>(points_.size()), 4096.0);

  if (dense_) {
    const auto slots = static_cast<std::size_t>(dense_size);
    offsets_.assign(slots + 1, 0);
    std::vector<std::size_t> slot_of(points_.size());
    for (std::size_t i = 0; i < points_.size(); ++i) {
      slot_of[i] = *DenseSlot(cells[i]);
      ++offsets_[slot_of[i] + 1];
    }
    for (std::size_t s = 0; s < slots; ++s) {
      if (offsets_[s + 1] > 0) ++bucket_count_;
      offsets_[s + 1] += offsets_[s];
    }
    order_.resize(points_.size());
    std::vector<std::uint32_t> fill(offsets_.begin(), offsets_.end() - 1);
    for (std::size_t i = 0; i < points_.size(); ++i) {
      order_[fill[slot_of[i]]++] = static_cast<std::uint32_t>(i);
    }
    return;
  }

  order_.resize(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) order_[i] = static_cast<std::uint32_t>(i);
  std::stable_sort(order_.begin(), order_.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return cells[a] < cells[b]; });
  std::uint32_t begin = 0;
  for (std::uint32_t k = 1; k <= order_.size(); ++k) {
    if (k == order_.size() || cells[order_[k]] != cells[order_[begin]]) {
      sparse_.emplace(cells[order_[begin]], std::make_pair(begin, k));
      begin = k;
    }
  }
  bucket_count_ = sparse_.size();
}

std::array<std::int64_t, 3> GridIndex::CellOf(Point p) const {
  std::array<std::int64_t, 3> c{};
  for (int k = 0; k < dim_; ++k) {
    c[k] = static_cast<std::int64_t>(std::floor(p[k] / cell_size_));
  }
  return c;
}

std::optional<std::size_t> GridIndex::DenseSlot(const std::array<std::int64_t, 3>& cell) const {
  std::size_t slot = 0;
  for (int k = 2; k >= 0; --k) {
    const std::int64_t off = cell[k] - min_cell_[k];
    if (off < 0 || off >= extent_[k]) return std::nullopt;
    slot = slot * static_cast<std::size_t>(extent_[k]) + static_cast<std::size_t>(off);
  }
  return slot;
}

std::span<const std::uint32_t> GridIndex::Bucket(const std::array<std::int64_t, 3>& cell) const {
  if (points_.empty()) return {};
  if (dense_) {
    const auto slot = DenseSlot(cell);
    if (!slot) return {};
    return {order_.data() + offsets_[*slot], order_.data() + offsets_[*slot + 1]};
  }
  const auto it = sparse_.find(cell);
  if (it == sparse_.end()) return {};
  return {order_.data() + it->second.first, order_.data() + it->second.second};
}

std::int64_t GridIndex::Reach(double r) const {
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(r / cell_size_)));
}

int GridIndex::BucketsTouched(double r) const {
  const auto side = 2 * Reach(r) + 1;
  return static_cast<int>(dim_ == 3 ? side * side * side : side * side);
}

std::vector<std::uint32_t> GridIndex::NeighborsWithin(Point p, double r) const {
  if (!(r > 0.0)) throw Error(ErrorKind::kParameter, "query radius must be positive");
  std::vector<std::uint32_t> out;
  ForEachWithin(p, r, [&](std::uint32_t j) { out.push_back(j); });
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace coxperc

namespace coxperc {

std::optional<std::uint32_t> GridIndex::Nearest(Point p) const {
  if (points_.empty()) return std::nullopt;
  const auto c = CellOf(p);
  std::int64_t max_ring = 0;
  for (int k = 0; k < dim_; ++k) {
    const std::int64_t lo = min_cell_[k];
    const std::int64_t hi = min_cell_[k] + extent_[k] - 1;
    max_ring = std::max({max_ring, std::abs(c[k] - lo), std::abs(c[k] - hi)});
  }
  std::optional<std::uint32_t> best;
  double best_d2 = 0.0;
  auto visit = [&](const std::array<std::int64_t, 3>& cell) {
    for (std::uint32_t j : Bucket(cell)) {
      const double d2 = Norm2(points_[j] - p);
      if (!best || d2 < best_d2 || (d2 == best_d2 && j < *best)) {
        best = j;
        best_d2 = d2;
      }
    }
  };
  auto scan = [&] {
    for (std::uint32_t j = 0; j < points_.size(); ++j) {
      const double d2 = Norm2(points_[j] - p);
      if (!best || d2 < best_d2) {
        best = j;
        best_d2 = d2;
      }
    }
    return best;
  };
  // Ring search pays per cell; past a budget of a few cells per point a
  // full scan is cheaper.
  const double budget = 4.0 * static_cast<double>(points_.size()) + 64.0;
  for (std::int64_t ring = 0; ring <= max_ring; ++ring) {
    if (std::pow(2.0 * static_cast<double>(ring) + 1.0, dim_) > budget) {
      best.reset();
      return scan();
    }
    const std::int64_t zr = dim_ == 3 ? ring : 0;
    for (std::int64_t dz = -zr; dz <= zr; ++dz) {
      for (std::int64_t dy = -ring; dy <= ring; ++dy) {
        for (std::int64_t dx = -ring; dx <= ring; ++dx) {
          const std::int64_t cheb = std::max({std::abs(dx), std::abs(dy), std::abs(dz)});
          if (cheb != ring) continue;
          visit({c[0] + dx, c[1] + dy, c[2] + dz});
        }
      }
    }
    // Any point in a farther ring is at least ring * cell_size away.
    if (best && std::sqrt(best_d2) <= static_cast<double>(ring) * cell_size_) break;
  }
  return best;
}

}  // namespace coxperc
