#pragma once

// Small convex-polygon toolkit on Eigen 2-vectors. Vertex lists are
// counter-clockwise and implicitly closed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace drive::poly {

using Point = Eigen::Vector2d;
using Vertices = std::vector<Point>;

inline double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

inline double signed_area(const Vertices& v) {
  double twice = 0.0;
  for (std::size_t i = 0, n = v.size(); i < n; ++i) twice += cross(v[i], v[(i + 1) % n]);
  return twice / 2.0;
}

inline Point centroid(const Vertices& v) {
  double a6 = 0.0;
  Point c = Point::Zero();
  for (std::size_t i = 0, n = v.size(); i < n; ++i) {
    const Point& p = v[i];
    const Point& q = v[(i + 1) % n];
    const double w = cross(p, q);
    a6 += w;
    c += (p + q) * w;
  }
  return c / (3.0 * a6);
}

/// Half-plane a.x <= c.
struct HalfPlane {
  Point normal;
  double offset;

  double slack(const Point& p) const { return offset - normal.dot(p); }
};

/// Sutherland-Hodgman clip of a convex polygon by one half-plane.
inline Vertices clip(const Vertices& in, const HalfPlane& h) {
  Vertices out;
  const std::size_t n = in.size();
  out.reserve(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const Point& cur = in[i];
    const Point& nxt = in[(i + 1) % n];
    const double sc = h.slack(cur);
    const double sn = h.slack(nxt);
    if (sc >= 0.0) out.push_back(cur);
    if ((sc >= 0.0) != (sn >= 0.0)) {
      const double t = sc / (sc - sn);
      out.push_back(cur + t * (nxt - cur));
    }
  }
  return out;
}

/// Merges vertices within `tol` of each other in both coordinates and drops
/// vertices lying on the segment joining their neighbours.
inline Vertices simplify(const Vertices& in, double tol = 1e-9) {
  Vertices merged;
  for (const Point& p : in) {
    if (merged.empty() || (p - merged.back()).cwiseAbs().maxCoeff() > tol) merged.push_back(p);
  }
  while (merged.size() > 1 && (merged.front() - merged.back()).cwiseAbs().maxCoeff() <= tol) {
    merged.pop_back();
  }

  bool changed = true;
  while (changed && merged.size() > 3) {
    changed = false;
    for (std::size_t i = 0, n = merged.size(); i < n; ++i) {
      const Point& prev = merged[(i + n - 1) % n];
      const Point& cur = merged[i];
      const Point& next = merged[(i + 1) % n];
      const Point e1 = cur - prev;
      const Point e2 = next - cur;
      const double scale = std::max(1.0, e1.norm() * e2.norm());
      if (std::abs(cross(e1, e2)) <= tol * scale) {
        merged.erase(merged.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        break;
      }
    }
  }
  return merged;
}

/// Inclusive containment for a counter-clockwise convex polygon.
inline bool contains(const Vertices& v, const Point& p, double tol = 0.0) {
  for (std::size_t i = 0, n = v.size(); i < n; ++i) {
    const Point& a = v[i];
    const Point& b = v[(i + 1) % n];
    const Point edge = b - a;
    if (cross(edge, p - a) < -tol * edge.norm()) return false;
  }
  return true;
}

struct Box {
  Point lo;
  Point hi;
};

inline Box bounding_box(const Vertices& v) {
  Box b{v.front(), v.front()};
  for (const Point& p : v) {
    b.lo = b.lo.cwiseMin(p);
    b.hi = b.hi.cwiseMax(p);
  }
  return b;
}

}  // namespace drive::poly
