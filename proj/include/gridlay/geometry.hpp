#pragma once

#include <algorithm>
#include <compare>
#include <optional>
#include <string_view>

namespace gridlay {

inline int floor_mod(int a, int m) {
  int r = a % m;
  return r < 0 ? r + m : r;
}

struct Point {
  int x = 0;
  int y = 0;

  friend auto operator<=>(const Point&, const Point&) = default;
};

/// Closed integer interval [lo, hi].
struct Interval {
  int lo = 0;
  int hi = 0;

  int length() const { return hi - lo; }
  bool contains(int v) const { return lo <= v && v <= hi; }
  bool overlaps(const Interval& o) const { return lo <= o.hi && o.lo <= hi; }

  static Interval spanning(int a, int b) { return {std::min(a, b), std::max(a, b)}; }

  friend auto operator<=>(const Interval&, const Interval&) = default;
};

/// Axis-aligned box [x0, x1] x [y0, y1]. Boxes that only share an edge do not
/// overlap.
struct Box {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  bool overlaps(const Box& o) const { return x0 < o.x1 && o.x0 < x1 && y0 < o.y1 && o.y0 < y1; }

  friend bool operator==(const Box&, const Box&) = default;
};

/// Manhattan orientations only; no 90 degree rotation.
enum class Orient { R0, MX, MY, R180 };

std::string_view to_string(Orient o);
std::optional<Orient> parse_orient(std::string_view s);

}  // namespace gridlay
