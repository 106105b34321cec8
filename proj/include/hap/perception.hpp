#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string_view>
#include <vector>

#include <Eigen/Geometry>

#include "hap/geometry.hpp"

namespace hap {

inline constexpr int kJointCount = 15;
inline constexpr int kBoneCount = 14;

enum class JointId : int {
  CLAV = 0,
  C7,
  LSHO,
  RSHO,
  LAEL,
  RAEL,
  LWPS,
  RWPS,
  L3,
  LHIP,
  RHIP,
  LKNE,
  RKNE,
  LHEE,
  RHEE,
};

inline constexpr std::array<std::string_view, kJointCount> kJointNames = {
    "CLAV", "C7",   "LSHO", "RSHO", "LAEL", "RAEL", "LWPS", "RWPS",
    "L3",   "LHIP", "RHIP", "LKNE", "RKNE", "LHEE", "RHEE"};

/// 15 tracked joints in world meters plus per-joint validity (occlusion).
struct Skeleton {
  std::array<Vec3, kJointCount> joints{};
  std::array<bool, kJointCount> valid{};

  Vec3& operator[](JointId id) { return joints[static_cast<std::size_t>(id)]; }
  const Vec3& operator[](JointId id) const { return joints[static_cast<std::size_t>(id)]; }
  bool is_valid(JointId id) const { return valid[static_cast<std::size_t>(id)]; }
  void set(JointId id, const Vec3& p) {
    joints[static_cast<std::size_t>(id)] = p;
    valid[static_cast<std::size_t>(id)] = true;
  }
  bool fully_valid() const {
    for (bool v : valid) {
      if (!v) return false;
    }
    return true;
  }
  int valid_count() const {
    int n = 0;
    for (bool v : valid) n += v ? 1 : 0;
    return n;
  }
};

/// Directed bone, parent toward child in the tree rooted at L3.
struct Bone {
  JointId parent;
  JointId child;
};

inline constexpr std::array<Bone, kBoneCount> kBones = {{
    {JointId::L3, JointId::C7},      // spine
    {JointId::C7, JointId::CLAV},
    {JointId::C7, JointId::LSHO},
    {JointId::C7, JointId::RSHO},
    {JointId::LSHO, JointId::LAEL},
    {JointId::LAEL, JointId::LWPS},
    {JointId::RSHO, JointId::RAEL},
    {JointId::RAEL, JointId::RWPS},
    {JointId::L3, JointId::LHIP},
    {JointId::L3, JointId::RHIP},
    {JointId::LHIP, JointId::LKNE},
    {JointId::LKNE, JointId::LHEE},
    {JointId::RHIP, JointId::RKNE},
    {JointId::RKNE, JointId::RHEE},
}};

struct CameraIntrinsics {
  double fx;
  double fy;
  double cx;
  double cy;
};

/// Sensor roll/pitch from the IMU, radians.
struct TiltAngles {
  double roll = 0.0;
  double pitch = 0.0;
};

struct LiftedPoint {
  Vec3 point;
  bool has_depth;  // false when the depth reading was zero
};

/// Pixel + depth to camera frame: +X right, +Y forward (depth), +Z up.
inline LiftedPoint lift_pixel(double u, double v, double depth, const CameraIntrinsics& k) {
  if (depth < 0.0) {
    throw std::invalid_argument("lift_pixel: negative depth");
  }
  if (depth == 0.0) {
    return {Vec3::Zero(), false};
  }
  return {Vec3{(u - k.cx) * depth / k.fx, depth, (k.cy - v) * depth / k.fy}, true};
}

/// Tilt compensation: world = Ry(pitch) * Rx(roll) * cam.
inline Eigen::Matrix3d tilt_rotation(const TiltAngles& angles) {
  const double ca = std::cos(angles.roll), sa = std::sin(angles.roll);
  const double cb = std::cos(angles.pitch), sb = std::sin(angles.pitch);
  Eigen::Matrix3d rx, ry;
  rx << 1, 0, 0,
        0, ca, -sa,
        0, sa, ca;
  ry << cb, 0, sb,
        0, 1, 0,
        -sb, 0, cb;
  return ry * rx;
}

inline Vec3 to_world(const Vec3& p_cam, const TiltAngles& angles) {
  return tilt_rotation(angles) * p_cam;
}

/// Per-bone capsule radii, indexed like kBones.
struct HumanGeometry {
  std::array<double, kBoneCount> bone_radius{};

  /// Torso bones (girdle, spine, pelvis) 0.15 m, limb bones 0.08 m.
  static HumanGeometry defaults(double limb = 0.08, double torso = 0.15) {
    HumanGeometry g;
    g.bone_radius = {torso, torso, torso, torso, limb, limb, limb,
                     limb,  torso, torso, limb,  limb, limb, limb};
    return g;
  }
};

/// One capsule per bone with both endpoints valid; occluded bones are omitted.
/// A fully occluded skeleton yields an empty list.
inline void skeleton_capsules(const Skeleton& s, const HumanGeometry& geo,
                              std::vector<Capsule>& out) {
  out.clear();
  for (std::size_t b = 0; b < kBoneCount; ++b) {
    const Bone& bone = kBones[b];
    if (!s.is_valid(bone.parent) || !s.is_valid(bone.child)) continue;
    out.push_back(Capsule{Segment{s[bone.parent], s[bone.child]}, geo.bone_radius[b]});
  }
}

inline std::vector<Capsule> skeleton_capsules(const Skeleton& s, const HumanGeometry& geo) {
  std::vector<Capsule> out;
  skeleton_capsules(s, geo, out);
  return out;
}

}  // namespace hap
