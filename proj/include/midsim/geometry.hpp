#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

namespace midsim {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr bool operator==(const Vec2&) const = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::sqrt(a.x * a.x + a.y * a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }
constexpr Vec2 left_normal(Vec2 a) { return {-a.y, a.x}; }

inline Vec2 normalized(Vec2 a) {
  const double n = norm(a);
  return n > 0.0 ? a * (1.0 / n) : Vec2{};
}

inline Vec2 heading_vector(double yaw) { return {std::cos(yaw), std::sin(yaw)}; }

// Wraps to [-pi, pi].
inline double wrap_angle(double a) { return std::remainder(a, 2.0 * kPi); }

// Rigid frame: origin plus heading. to_local maps world points into the frame
// with the origin at zero and the heading along +x.
class Frame {
 public:
  Frame() = default;
  Frame(Vec2 origin, double yaw)
      : origin_(origin), yaw_(yaw), c_(std::cos(yaw)), s_(std::sin(yaw)) {}

  Vec2 origin() const { return origin_; }
  double yaw() const { return yaw_; }

  Vec2 to_local(Vec2 p) const {
    const Vec2 d = p - origin_;
    return {c_ * d.x + s_ * d.y, -s_ * d.x + c_ * d.y};
  }
  Vec2 to_local_direction(Vec2 v) const {
    return {c_ * v.x + s_ * v.y, -s_ * v.x + c_ * v.y};
  }
  Vec2 to_world(Vec2 p) const {
    return {origin_.x + c_ * p.x - s_ * p.y, origin_.y + s_ * p.x + c_ * p.y};
  }
  Vec2 to_world_direction(Vec2 v) const {
    return {c_ * v.x - s_ * v.y, s_ * v.x + c_ * v.y};
  }

 private:
  Vec2 origin_{};
  double yaw_ = 0.0;
  double c_ = 1.0;
  double s_ = 0.0;
};

struct OrientedBox {
  Vec2 center{};
  double yaw = 0.0;
  double length = 0.0;
  double width = 0.0;

  // Counter-clockwise starting at front-left.
  std::array<Vec2, 4> corners() const {
    const Vec2 f = heading_vector(yaw) * (0.5 * length);
    const Vec2 l = left_normal(heading_vector(yaw)) * (0.5 * width);
    return {center + f + l, center - f + l, center - f - l, center + f - l};
  }
  double circumradius() const { return 0.5 * std::hypot(length, width); }

  bool contains(Vec2 p) const {
    const Vec2 d = p - center;
    const Vec2 h = heading_vector(yaw);
    return std::abs(dot(d, h)) <= 0.5 * length &&
           std::abs(cross(h, d)) <= 0.5 * width;
  }
};

// Separating-axis test on the four box axes. Touching boxes do not overlap.
inline bool boxes_overlap(const OrientedBox& a, const OrientedBox& b) {
  const Vec2 d = b.center - a.center;
  const double reach = a.circumradius() + b.circumradius();
  if (dot(d, d) >= reach * reach) return false;
  const Vec2 ah = heading_vector(a.yaw);
  const Vec2 bh = heading_vector(b.yaw);
  const std::array<Vec2, 4> axes = {ah, left_normal(ah), bh, left_normal(bh)};
  for (const Vec2& axis : axes) {
    const double ra = 0.5 * a.length * std::abs(dot(ah, axis)) +
                      0.5 * a.width * std::abs(dot(left_normal(ah), axis));
    const double rb = 0.5 * b.length * std::abs(dot(bh, axis)) +
                      0.5 * b.width * std::abs(dot(left_normal(bh), axis));
    if (std::abs(dot(d, axis)) >= ra + rb) return false;
  }
  return true;
}

// First time at which b, translating with velocity `rel` relative to a,
// overlaps a. 0 if already overlapping, infinity if never.
inline double time_to_overlap(const OrientedBox& a, const OrientedBox& b, Vec2 rel) {
  const Vec2 d = b.center - a.center;
  const Vec2 ah = heading_vector(a.yaw);
  const Vec2 bh = heading_vector(b.yaw);
  const std::array<Vec2, 4> axes = {ah, left_normal(ah), bh, left_normal(bh)};
  double enter = 0.0;
  double leave = kInf;
  for (const Vec2& axis : axes) {
    const double r = 0.5 * a.length * std::abs(dot(ah, axis)) +
                     0.5 * a.width * std::abs(dot(left_normal(ah), axis)) +
                     0.5 * b.length * std::abs(dot(bh, axis)) +
                     0.5 * b.width * std::abs(dot(left_normal(bh), axis));
    const double p = dot(d, axis);
    const double s = dot(rel, axis);
    if (std::abs(s) < 1e-12) {
      if (std::abs(p) >= r) return kInf;
      continue;
    }
    double t0 = (-r - p) / s;
    double t1 = (r - p) / s;
    if (t0 > t1) std::swap(t0, t1);
    enter = std::max(enter, t0);
    leave = std::min(leave, t1);
    if (enter >= leave) return kInf;
  }
  return enter;
}

// Sutherland-Hodgman clip of two convex CCW polygons.
inline std::vector<Vec2> clip_convex(std::span<const Vec2> subject,
                                     std::span<const Vec2> clip) {
  std::vector<Vec2> out(subject.begin(), subject.end());
  for (std::size_t i = 0; i < clip.size() && !out.empty(); ++i) {
    const Vec2 a = clip[i];
    const Vec2 b = clip[(i + 1) % clip.size()];
    const Vec2 e = b - a;
    std::vector<Vec2> in = std::move(out);
    out.clear();
    for (std::size_t j = 0; j < in.size(); ++j) {
      const Vec2 p = in[j];
      const Vec2 q = in[(j + 1) % in.size()];
      const double sp = cross(e, p - a);
      const double sq = cross(e, q - a);
      if (sp >= 0.0) out.push_back(p);
      if ((sp >= 0.0) != (sq >= 0.0)) {
        const double t = sp / (sp - sq);
        out.push_back(p + (q - p) * t);
      }
    }
  }
  return out;
}

inline Vec2 polygon_centroid(std::span<const Vec2> poly) {
  if (poly.empty()) return {};
  double area2 = 0.0;
  Vec2 acc{};
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 p = poly[i];
    const Vec2 q = poly[(i + 1) % poly.size()];
    const double c = cross(p, q);
    area2 += c;
    acc += (p + q) * c;
  }
  if (std::abs(area2) < 1e-12) {
    Vec2 mean{};
    for (const Vec2& p : poly) mean += p;
    return mean * (1.0 / static_cast<double>(poly.size()));
  }
  return acc * (1.0 / (3.0 * area2));
}

struct SegmentClosest {
  double t = 0.0;  // in [0, 1]
  Vec2 point{};
  double distance = kInf;
};

inline SegmentClosest closest_on_segment(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const Vec2 c = a + ab * t;
  return {t, c, distance(p, c)};
}

inline bool segments_intersect(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
  const double d1 = cross(q2 - q1, p1 - q1);
  const double d2 = cross(q2 - q1, p2 - q1);
  const double d3 = cross(p2 - p1, q1 - p1);
  const double d4 = cross(p2 - p1, q2 - p1);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
      ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  auto on = [](Vec2 a, Vec2 b, Vec2 c) {
    return closest_on_segment(c, a, b).distance < 1e-12;
  };
  return on(q1, q2, p1) || on(q1, q2, p2) || on(p1, p2, q1) || on(p1, p2, q2);
}

inline double segment_segment_distance(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
  if (segments_intersect(p1, p2, q1, q2)) return 0.0;
  return std::min({closest_on_segment(p1, q1, q2).distance,
                   closest_on_segment(p2, q1, q2).distance,
                   closest_on_segment(q1, p1, p2).distance,
                   closest_on_segment(q2, p1, p2).distance});
}

inline double box_segment_distance(const OrientedBox& box, Vec2 a, Vec2 b) {
  if (box.contains(a) || box.contains(b)) return 0.0;
  const auto c = box.corners();
  double best = kInf;
  for (std::size_t i = 0; i < 4; ++i) {
    best = std::min(best, segment_segment_distance(a, b, c[i], c[(i + 1) % 4]));
    if (best == 0.0) break;
  }
  return best;
}

// Piecewise-linear curve with cumulative arclength.
class Polyline {
 public:
  struct Projection {
    double s = 0.0;
    double distance = kInf;
    Vec2 point{};
    std::size_t segment = 0;
  };

  Polyline() = default;
  explicit Polyline(std::vector<Vec2> points) : points_(std::move(points)) {
    arclength_.resize(points_.size(), 0.0);
    for (std::size_t i = 1; i < points_.size(); ++i) {
      arclength_[i] = arclength_[i - 1] + distance(points_[i - 1], points_[i]);
    }
    for (std::size_t c = 0; c * kChunk + 1 < points_.size(); ++c) {
      const std::size_t end = std::min(points_.size(), (c + 1) * kChunk + 1);
      Vec2 lo = points_[c * kChunk];
      Vec2 hi = lo;
      for (std::size_t i = c * kChunk; i < end; ++i) {
        lo = {std::min(lo.x, points_[i].x), std::min(lo.y, points_[i].y)};
        hi = {std::max(hi.x, points_[i].x), std::max(hi.y, points_[i].y)};
      }
      chunks_.push_back({lo, hi});
    }
  }

  const std::vector<Vec2>& points() const { return points_; }
  const std::vector<double>& arclength() const { return arclength_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  double length() const { return arclength_.empty() ? 0.0 : arclength_.back(); }

  Vec2 point_at(double s) const {
    if (points_.empty()) return {};
    if (points_.size() == 1 || s <= 0.0) return points_.front();
    if (s >= length()) return points_.back();
    const std::size_t i = segment_at(s);
    const double seg = arclength_[i + 1] - arclength_[i];
    const double t = seg > 0.0 ? (s - arclength_[i]) / seg : 0.0;
    return points_[i] + (points_[i + 1] - points_[i]) * t;
  }

  Vec2 direction_at(double s) const {
    if (points_.size() < 2) return {1.0, 0.0};
    std::size_t i = segment_at(std::clamp(s, 0.0, length()));
    // Skip zero-length segments.
    while (i + 1 < points_.size() - 1 &&
           arclength_[i + 1] - arclength_[i] <= 0.0) {
      ++i;
    }
    return normalized(points_[i + 1] - points_[i]);
  }

  // Global closest point; ties resolve to the earliest segment.
  Projection project(Vec2 p) const {
    Projection best;
    if (points_.empty()) return best;
    if (points_.size() == 1) {
      best.point = points_[0];
      best.distance = distance(p, points_[0]);
      return best;
    }
    double best_d2 = kInf;
    double best_t = 0.0;
    auto scan = [&](std::size_t c) {
      const std::size_t end = std::min(points_.size() - 1, (c + 1) * kChunk);
      for (std::size_t i = c * kChunk; i < end; ++i) {
        const Vec2 a = points_[i];
        const Vec2 ab = points_[i + 1] - a;
        const Vec2 ap = p - a;
        const double len2 = dot(ab, ab);
        const double t = len2 > 0.0 ? std::clamp(dot(ap, ab) / len2, 0.0, 1.0) : 0.0;
        const Vec2 d = ap - ab * t;
        const double d2 = dot(d, d);
        if (d2 < best_d2 || (d2 == best_d2 && i < best.segment)) {
          best_d2 = d2;
          best_t = t;
          best.segment = i;
        }
      }
    };
    auto box_d2 = [&](std::size_t c) {
      const double dx = std::max({chunks_[c].lo.x - p.x, 0.0, p.x - chunks_[c].hi.x});
      const double dy = std::max({chunks_[c].lo.y - p.y, 0.0, p.y - chunks_[c].hi.y});
      return dx * dx + dy * dy;
    };
    // Seed with the chunk whose box is nearest, then prune the rest.
    std::size_t seed = 0;
    for (std::size_t c = 1; c < chunks_.size(); ++c) {
      if (box_d2(c) < box_d2(seed)) seed = c;
    }
    scan(seed);
    for (std::size_t c = 0; c < chunks_.size(); ++c) {
      if (c != seed && box_d2(c) <= best_d2) scan(c);
    }
    const std::size_t i = best.segment;
    best.point = points_[i] + (points_[i + 1] - points_[i]) * best_t;
    best.distance = distance(p, best.point);
    best.s = arclength_[i] + best_t * (arclength_[i + 1] - arclength_[i]);
    return best;
  }

  // Samples at exact multiples of spacing from the start, plus the endpoint
  // when it does not fall on a tick.
  std::vector<Vec2> resample(double spacing) const {
    std::vector<Vec2> out;
    if (points_.empty() || spacing <= 0.0) return out;
    const double len = length();
    const auto ticks = static_cast<std::size_t>(std::floor(len / spacing + 1e-9));
    out.reserve(ticks + 2);
    for (std::size_t k = 0; k <= ticks; ++k) {
      out.push_back(point_at(static_cast<double>(k) * spacing));
    }
    if (len - static_cast<double>(ticks) * spacing > 1e-9) out.push_back(points_.back());
    return out;
  }

  // Prefix of the curve up to arclength s (inclusive endpoint).
  Polyline truncated(double s) const {
    if (s >= length()) return *this;
    std::vector<Vec2> pts;
    for (std::size_t i = 0; i < points_.size() && arclength_[i] < s; ++i) {
      pts.push_back(points_[i]);
    }
    pts.push_back(point_at(s));
    return Polyline(std::move(pts));
  }

  // Lateral offset along left normals (positive = left).
  Polyline offset(double lateral) const {
    if (points_.size() < 2 || lateral == 0.0) return *this;
    std::vector<Vec2> pts(points_.size());
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const Vec2 prev = i > 0 ? normalized(points_[i] - points_[i - 1]) : Vec2{};
      const Vec2 next =
          i + 1 < points_.size() ? normalized(points_[i + 1] - points_[i]) : Vec2{};
      const Vec2 tangent = normalized(prev + next);
      pts[i] = points_[i] + left_normal(tangent) * lateral;
    }
    return Polyline(std::move(pts));
  }

 private:
  std::size_t segment_at(double s) const {
    auto it = std::upper_bound(arclength_.begin(), arclength_.end(), s);
    std::size_t i = static_cast<std::size_t>(it - arclength_.begin());
    i = i == 0 ? 0 : i - 1;
    return std::min(i, points_.size() - 2);
  }

  static constexpr std::size_t kChunk = 16;  // segments per pruning box
  struct Box {
    Vec2 lo;
    Vec2 hi;
  };

  std::vector<Vec2> points_;
  std::vector<double> arclength_;
  std::vector<Box> chunks_;
};

// Uniform-grid bucket index over line segments. Segments are referenced by
// caller-defined indices.
class SegmentGrid {
 public:
  explicit SegmentGrid(double cell = 10.0) : cell_(cell) {}

  void insert(std::size_t id, Vec2 a, Vec2 b) {
    dense_offsets_.clear();
    dense_ids_.clear();
    const auto [x0, x1] = std::minmax(a.x, b.x);
    const auto [y0, y1] = std::minmax(a.y, b.y);
    for (std::int64_t cx = key(x0); cx <= key(x1); ++cx) {
      for (std::int64_t cy = key(y0); cy <= key(y1); ++cy) {
        cells_[pack(cx, cy)].push_back(id);
      }
    }
    if (empty_) {
      lo_ = {x0, y0};
      hi_ = {x1, y1};
      empty_ = false;
    } else {
      lo_ = {std::min(lo_.x, x0), std::min(lo_.y, y0)};
      hi_ = {std::max(hi_.x, x1), std::max(hi_.y, y1)};
    }
  }

  bool empty() const { return empty_; }
  double cell() const { return cell_; }

  // Packs the buckets into a dense array for faster lookups. Further inserts
  // drop the packed form.
  void freeze() {
    dense_ids_.clear();
    dense_offsets_.clear();
    if (cells_.empty()) return;
    std::int64_t x0 = std::numeric_limits<std::int64_t>::max();
    std::int64_t y0 = x0;
    std::int64_t x1 = std::numeric_limits<std::int64_t>::min();
    std::int64_t y1 = x1;
    for (const auto& [k, ids] : cells_) {
      const auto [cx, cy] = unpack(k);
      x0 = std::min(x0, cx);
      y0 = std::min(y0, cy);
      x1 = std::max(x1, cx);
      y1 = std::max(y1, cy);
    }
    const std::int64_t nx = x1 - x0 + 1;
    const std::int64_t ny = y1 - y0 + 1;
    if (nx * ny > kMaxDenseCells) return;
    dense_x0_ = x0;
    dense_y0_ = y0;
    dense_nx_ = nx;
    dense_ny_ = ny;
    std::vector<const std::vector<std::size_t>*> slot(static_cast<std::size_t>(nx * ny), nullptr);
    for (const auto& [k, ids] : cells_) {
      const auto [cx, cy] = unpack(k);
      slot[static_cast<std::size_t>((cx - x0) * ny + (cy - y0))] = &ids;
    }
    dense_offsets_.reserve(slot.size() + 1);
    dense_offsets_.push_back(0);
    for (const auto* ids : slot) {
      if (ids != nullptr) dense_ids_.insert(dense_ids_.end(), ids->begin(), ids->end());
      dense_offsets_.push_back(dense_ids_.size());
    }
  }

  // Calls visit(id) for every segment whose cell lies within `radius` of p.
  // Ids can repeat.
  template <typename Visit>
  void for_each_near(Vec2 p, double radius, Visit&& visit) const {
    if (empty_) return;
    for (std::int64_t cx = key(p.x - radius); cx <= key(p.x + radius); ++cx) {
      for (std::int64_t cy = key(p.y - radius); cy <= key(p.y + radius); ++cy) {
        for_each_in_cell(cx, cy, visit);
      }
    }
  }

  // Grows rings of cells around p until the best candidate found by
  // `measure(id) -> distance` is provably the global minimum.
  template <typename Measure>
  std::pair<std::size_t, double> nearest(Vec2 p, Measure&& measure) const {
    std::size_t best_id = static_cast<std::size_t>(-1);
    double best = kInf;
    if (empty_) return {best_id, best};
    const double span = std::max(hi_.x - lo_.x, hi_.y - lo_.y) +
                        std::max({std::abs(p.x - lo_.x), std::abs(p.x - hi_.x),
                                  std::abs(p.y - lo_.y), std::abs(p.y - hi_.y)});
    const auto max_ring = static_cast<std::int64_t>(span / cell_) + 2;
    const std::int64_t kx = key(p.x);
    const std::int64_t ky = key(p.y);
    for (std::int64_t r = 0; r <= max_ring; ++r) {
      for (std::int64_t cx = kx - r; cx <= kx + r; ++cx) {
        for (std::int64_t cy = ky - r; cy <= ky + r; ++cy) {
          if (std::max(std::abs(cx - kx), std::abs(cy - ky)) != r) continue;
          for_each_in_cell(cx, cy, [&](std::size_t id) {
            const double d = measure(id);
            if (d < best || (d == best && id < best_id)) {
              best = d;
              best_id = id;
            }
          });
        }
      }
      // Anything outside ring r is at least r * cell away.
      if (best <= static_cast<double>(r) * cell_) break;
    }
    return {best_id, best};
  }

 private:
  static constexpr std::int64_t kMaxDenseCells = std::int64_t{1} << 22;

  std::int64_t key(double v) const {
    return static_cast<std::int64_t>(std::floor(v / cell_));
  }
  static std::uint64_t pack(std::int64_t cx, std::int64_t cy) {
    return (static_cast<std::uint64_t>(cx) << 32) |
           (static_cast<std::uint64_t>(cy) & 0xffffffffULL);
  }
  static std::pair<std::int64_t, std::int64_t> unpack(std::uint64_t k) {
    return {static_cast<std::int32_t>(k >> 32), static_cast<std::int32_t>(k & 0xffffffffULL)};
  }

  template <typename Visit>
  void for_each_in_cell(std::int64_t cx, std::int64_t cy, Visit&& visit) const {
    if (!dense_offsets_.empty()) {
      const std::int64_t ix = cx - dense_x0_;
      const std::int64_t iy = cy - dense_y0_;
      if (ix < 0 || iy < 0 || ix >= dense_nx_ || iy >= dense_ny_) return;
      const auto c = static_cast<std::size_t>(ix * dense_ny_ + iy);
      for (std::size_t k = dense_offsets_[c]; k < dense_offsets_[c + 1]; ++k) visit(dense_ids_[k]);
      return;
    }
    auto it = cells_.find(pack(cx, cy));
    if (it == cells_.end()) return;
    for (std::size_t id : it->second) visit(id);
  }

  double cell_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
  std::vector<std::size_t> dense_offsets_;  // empty when not frozen
  std::vector<std::size_t> dense_ids_;
  std::int64_t dense_x0_ = 0;
  std::int64_t dense_y0_ = 0;
  std::int64_t dense_nx_ = 0;
  std::int64_t dense_ny_ = 0;
  Vec2 lo_{};
  Vec2 hi_{};
  bool empty_ = true;
};

}  // namespace midsim
