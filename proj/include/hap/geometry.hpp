#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace hap {

using Vec3 = Eigen::Vector3d;

/// Line segment between two points. a == b is allowed and treated as a point.
struct Segment {
  Vec3 a;
  Vec3 b;
};

/// Segment swept by a sphere. radius must be > 0.
struct Capsule {
  Segment axis;
  double radius;
};

inline double point_segment_distance(const Vec3& p, const Segment& s) {
  const Vec3 ab = s.b - s.a;
  const double len2 = ab.squaredNorm();
  if (len2 <= 0.0) {
    return (p - s.a).norm();
  }
  const double t = std::clamp((p - s.a).dot(ab) / len2, 0.0, 1.0);
  return (p - (s.a + t * ab)).norm();
}

namespace detail {

// Closest-point parameters between segments, clamped to [0,1]^2.
// Standard quadratic minimization with region clamping; handles
// degenerate and parallel segments.
struct SegmentClosest {
  double s;
  double t;
};

inline SegmentClosest closest_segment_params(const Segment& s1, const Segment& s2) {
  constexpr double kEps = 1e-14;
  const Vec3 d1 = s1.b - s1.a;
  const Vec3 d2 = s2.b - s2.a;
  const Vec3 r = s1.a - s2.a;
  const double a = d1.squaredNorm();
  const double e = d2.squaredNorm();
  const double f = d2.dot(r);

  if (a <= kEps && e <= kEps) {
    return {0.0, 0.0};
  }
  if (a <= kEps) {
    return {0.0, std::clamp(f / e, 0.0, 1.0)};
  }
  const double c = d1.dot(r);
  if (e <= kEps) {
    return {std::clamp(-c / a, 0.0, 1.0), 0.0};
  }

  const double b = d1.dot(d2);
  const double denom = a * e - b * b;
  // Parallel segments have denom == 0; any s works, pick s = 0 and clamp below.
  double s = (denom > kEps) ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
  double t = (b * s + f) / e;
  if (t < 0.0) {
    t = 0.0;
    s = std::clamp(-c / a, 0.0, 1.0);
  } else if (t > 1.0) {
    t = 1.0;
    s = std::clamp((b - c) / a, 0.0, 1.0);
  }
  return {s, t};
}

inline double segment_distance_ordered(const Segment& s1, const Segment& s2) {
  const auto [s, t] = closest_segment_params(s1, s2);
  const Vec3 p1 = s1.a + s * (s1.b - s1.a);
  const Vec3 p2 = s2.a + t * (s2.b - s2.a);
  return (p1 - p2).norm();
}

// Lexicographic segment ordering so the kernel sees arguments in a fixed
// role order; makes the distance exactly symmetric in its arguments.
inline bool segment_less(const Segment& s1, const Segment& s2) {
  for (int i = 0; i < 3; ++i) {
    if (s1.a[i] != s2.a[i]) return s1.a[i] < s2.a[i];
  }
  for (int i = 0; i < 3; ++i) {
    if (s1.b[i] != s2.b[i]) return s1.b[i] < s2.b[i];
  }
  return false;
}

}  // namespace detail

inline double segment_segment_distance(const Segment& s1, const Segment& s2) {
  if (detail::segment_less(s2, s1)) {
    return detail::segment_distance_ordered(s2, s1);
  }
  return detail::segment_distance_ordered(s1, s2);
}

/// Signed: negative means the capsules penetrate.
inline double capsule_capsule_distance(const Capsule& c1, const Capsule& c2) {
  return segment_segment_distance(c1.axis, c2.axis) - c1.radius - c2.radius;
}

/// Row-major distance matrix, rows indexed by set1, cols by set2.
struct DistanceMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  bool empty() const { return data.empty(); }
};

/// Every element equals the scalar capsule_capsule_distance of its pair;
/// results do not depend on evaluation order or chunking.
inline DistanceMatrix batch_capsule_distances(std::span<const Capsule> set1,
                                              std::span<const Capsule> set2) {
  DistanceMatrix m;
  m.rows = set1.size();
  m.cols = set2.size();
  m.data.resize(m.rows * m.cols);
  for (std::size_t j = 0; j < m.rows; ++j) {
    for (std::size_t k = 0; k < m.cols; ++k) {
      m(j, k) = capsule_capsule_distance(set1[j], set2[k]);
    }
  }
  return m;
}

}  // namespace hap
