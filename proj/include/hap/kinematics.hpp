#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Geometry>

#include "hap/geometry.hpp"

namespace hap {

inline constexpr int kNumJoints = 6;
inline constexpr int kNumFrames = kNumJoints + 1;  // base frame + one per joint

/// 6 revolute joint angles in radians.
struct JointConfig {
  std::array<double, kNumJoints> q{};

  double& operator[](int i) { return q[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return q[static_cast<std::size_t>(i)]; }

  friend bool operator==(const JointConfig&, const JointConfig&) = default;
};

/// Wraps into [-pi, pi). Throws on non-finite input.
inline double wrap_angle(double theta) {
  if (!std::isfinite(theta)) {
    throw std::invalid_argument("wrap_angle: non-finite angle");
  }
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = theta - two_pi * std::floor((theta + std::numbers::pi) / two_pi);
  // Guard the open upper bound against rounding in the floor expression.
  if (w >= std::numbers::pi) w -= two_pi;
  if (w < -std::numbers::pi) w += two_pi;
  return w;
}

inline JointConfig wrap(const JointConfig& cfg) {
  JointConfig out;
  for (int i = 0; i < kNumJoints; ++i) out[i] = wrap_angle(cfg[i]);
  return out;
}

/// Per-joint shortest-arc difference from `from` to `to`, each in [-pi, pi).
inline std::array<double, kNumJoints> wrapped_delta(const JointConfig& from,
                                                    const JointConfig& to) {
  std::array<double, kNumJoints> d{};
  for (int i = 0; i < kNumJoints; ++i) {
    d[static_cast<std::size_t>(i)] = wrap_angle(to[i] - from[i]);
  }
  return d;
}

/// Euclidean norm of the wrapped difference vector (geodesic joint metric).
inline double wrapped_distance(const JointConfig& q1, const JointConfig& q2) {
  const auto d = wrapped_delta(q1, q2);
  double sum = 0.0;
  for (double v : d) sum += v * v;
  return std::sqrt(sum);
}

/// Max-norm of the wrapped difference vector.
inline double wrapped_chebyshev(const JointConfig& q1, const JointConfig& q2) {
  const auto d = wrapped_delta(q1, q2);
  double m = 0.0;
  for (double v : d) m = std::max(m, std::abs(v));
  return m;
}

/// Moves from q1 toward q2 by at most `delta` along the per-joint shorter
/// arcs; returns q2 (wrapped) when it is within `delta`.
inline JointConfig angular_step(const JointConfig& q1, const JointConfig& q2, double delta) {
  if (!(delta > 0.0)) {
    throw std::invalid_argument("angular_step: delta must be > 0");
  }
  const auto d = wrapped_delta(q1, q2);
  double norm2 = 0.0;
  for (double v : d) norm2 += v * v;
  const double norm = std::sqrt(norm2);
  if (norm <= delta) {
    return wrap(q2);
  }
  JointConfig out;
  const double scale = delta / norm;
  for (int i = 0; i < kNumJoints; ++i) {
    out[i] = wrap_angle(q1[i] + scale * d[static_cast<std::size_t>(i)]);
  }
  return out;
}

/// One Denavit-Hartenberg row (standard convention).
struct DhRow {
  double a;             // link length, m
  double d;             // link offset, m
  double alpha;         // link twist, rad
  double theta_offset;  // added to the joint variable, rad
};

struct DhChain {
  std::array<DhRow, kNumJoints> rows;
  Eigen::Isometry3d base = Eigen::Isometry3d::Identity();
};

using FrameSet = std::array<Eigen::Isometry3d, kNumFrames>;

inline Eigen::Isometry3d dh_transform(const DhRow& row, double theta) {
  const double th = theta + row.theta_offset;
  const double ct = std::cos(th), st = std::sin(th);
  const double ca = std::cos(row.alpha), sa = std::sin(row.alpha);
  Eigen::Matrix4d m;
  m << ct, -st * ca, st * sa, row.a * ct,
       st, ct * ca, -ct * sa, row.a * st,
       0.0, sa, ca, row.d,
       0.0, 0.0, 0.0, 1.0;
  Eigen::Isometry3d t;
  t.matrix() = m;
  return t;
}

/// Frame i is base composed with DH transforms 1..i; frame 0 is the base.
inline FrameSet forward_kinematics(const DhChain& chain, const JointConfig& cfg) {
  FrameSet frames;
  frames[0] = chain.base;
  for (int i = 0; i < kNumJoints; ++i) {
    frames[static_cast<std::size_t>(i + 1)] =
        frames[static_cast<std::size_t>(i)] *
        dh_transform(chain.rows[static_cast<std::size_t>(i)], cfg[i]);
  }
  return frames;
}

/// A link capsule spans the origins of two chain frames.
struct LinkCapsule {
  int from_frame;
  int to_frame;
  double radius;
};

struct LinkGeometry {
  std::vector<LinkCapsule> links;
};

inline void robot_capsules(const DhChain& chain, const LinkGeometry& geo,
                           const JointConfig& cfg, std::vector<Capsule>& out) {
  const FrameSet frames = forward_kinematics(chain, cfg);
  out.clear();
  out.reserve(geo.links.size());
  for (const LinkCapsule& link : geo.links) {
    out.push_back(Capsule{
        Segment{frames[static_cast<std::size_t>(link.from_frame)].translation(),
                frames[static_cast<std::size_t>(link.to_frame)].translation()},
        link.radius});
  }
}

inline std::vector<Capsule> robot_capsules(const DhChain& chain, const LinkGeometry& geo,
                                           const JointConfig& cfg) {
  std::vector<Capsule> out;
  robot_capsules(chain, geo, cfg, out);
  return out;
}

/// UR16e parameter table (standard DH).
inline DhChain ur16e_chain() {
  constexpr double half_pi = std::numbers::pi / 2.0;
  DhChain chain;
  chain.rows = {DhRow{0.0, 0.1807, half_pi, 0.0},
                DhRow{-0.4784, 0.0, 0.0, 0.0},
                DhRow{-0.36, 0.0, 0.0, 0.0},
                DhRow{0.0, 0.17415, half_pi, 0.0},
                DhRow{0.0, 0.11985, -half_pi, 0.0},
                DhRow{0.0, 0.11655, 0.0, 0.0}};
  return chain;
}

/// One capsule per moving link, consecutive frames, fixed 0.06 m radius.
inline LinkGeometry default_link_geometry(double radius = 0.06) {
  LinkGeometry geo;
  for (int i = 0; i < kNumJoints; ++i) {
    geo.links.push_back(LinkCapsule{i, i + 1, radius});
  }
  return geo;
}

}  // namespace hap
