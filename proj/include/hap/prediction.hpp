#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "hap/perception.hpp"

namespace hap {

/// Sliding observation window of skeletons with strictly increasing timestamps.
struct PoseWindow {
  std::vector<double> timestamps;
  std::vector<Skeleton> frames;

  std::size_t size() const { return frames.size(); }

  void push(double t, const Skeleton& s) {
    if (!timestamps.empty() && t <= timestamps.back()) {
      throw std::invalid_argument("PoseWindow: timestamps must strictly increase");
    }
    timestamps.push_back(t);
    frames.push_back(s);
  }

  void trim_to(std::size_t max_frames) {
    if (frames.size() <= max_frames) return;
    const std::size_t drop = frames.size() - max_frames;
    timestamps.erase(timestamps.begin(), timestamps.begin() + static_cast<std::ptrdiff_t>(drop));
    frames.erase(frames.begin(), frames.begin() + static_cast<std::ptrdiff_t>(drop));
  }
};

/// One predicted step: skeleton, horizon weight in (0,1], and its time
/// offset in seconds from the prediction instant.
struct ForecastStep {
  Skeleton skeleton;
  double weight;
  double time_offset;
};

struct PoseForecast {
  std::vector<ForecastStep> steps;
};

/// Geometric horizon weights decay^0 .. decay^(n-1).
inline std::vector<double> geometric_weights(int n, double decay = 0.9) {
  std::vector<double> w(static_cast<std::size_t>(n));
  double v = 1.0;
  for (int i = 0; i < n; ++i) {
    w[static_cast<std::size_t>(i)] = v;
    v *= decay;
  }
  return w;
}

/// Per-frame bone unit vectors and frame-to-frame joint displacements.
struct BoneFeatures {
  std::array<Vec3, kBoneCount> bone_dirs{};
  std::array<Vec3, kJointCount> displacements{};
};

/// Requires fully valid frames. Throws on a zero-length bone.
/// Both feature families are invariant to a global translation of the window.
inline std::vector<BoneFeatures> extract_features(const PoseWindow& w) {
  std::vector<BoneFeatures> out(w.size());
  for (std::size_t f = 0; f < w.size(); ++f) {
    const Skeleton& s = w.frames[f];
    if (!s.fully_valid()) {
      throw std::invalid_argument("extract_features: frame has occluded joints");
    }
    for (std::size_t b = 0; b < kBoneCount; ++b) {
      const Vec3 v = s[kBones[b].child] - s[kBones[b].parent];
      const double len = v.norm();
      if (len <= 0.0) {
        throw std::invalid_argument("extract_features: zero-length bone");
      }
      out[f].bone_dirs[b] = v / len;
    }
    for (std::size_t j = 0; j < kJointCount; ++j) {
      out[f].displacements[j] =
          (f == 0) ? Vec3::Zero() : Vec3(s.joints[j] - w.frames[f - 1].joints[j]);
    }
  }
  return out;
}

inline std::array<double, kBoneCount> bone_lengths(const Skeleton& s) {
  std::array<double, kBoneCount> lengths{};
  for (std::size_t b = 0; b < kBoneCount; ++b) {
    lengths[b] = (s[kBones[b].child] - s[kBones[b].parent]).norm();
  }
  return lengths;
}

/// Rebuilds joint positions from the root joint outward along the bone tree.
/// Bone vectors must be unit length within 1e-6.
inline Skeleton reconstruct_pose(const Vec3& root_l3,
                                 const std::array<Vec3, kBoneCount>& bone_dirs,
                                 const std::array<double, kBoneCount>& lengths) {
  for (std::size_t b = 0; b < kBoneCount; ++b) {
    if (std::abs(bone_dirs[b].norm() - 1.0) > 1e-6) {
      throw std::invalid_argument("reconstruct_pose: non-unit bone vector");
    }
    if (!(lengths[b] > 0.0)) {
      throw std::invalid_argument("reconstruct_pose: non-positive bone length");
    }
  }
  Skeleton s;
  s.set(JointId::L3, root_l3);
  // kBones is ordered so every parent appears before its children.
  for (std::size_t b = 0; b < kBoneCount; ++b) {
    const Bone& bone = kBones[b];
    s.set(bone.child, s[bone.parent] + lengths[b] * bone_dirs[b]);
  }
  return s;
}

struct LossWeights {
  double lambda_p = 1.0;
  double lambda_b = 0.5;
};

/// Position MSE over all joint coordinates plus mean bone-direction
/// cosine mismatch, weighted by lambda_p / lambda_b.
inline double prediction_loss(std::span<const Skeleton> pred, std::span<const Skeleton> truth,
                              const LossWeights& lw) {
  if (pred.size() != truth.size() || pred.empty()) {
    throw std::invalid_argument("prediction_loss: sequence length mismatch");
  }
  double se = 0.0;
  double bone_term = 0.0;
  for (std::size_t f = 0; f < pred.size(); ++f) {
    if (!pred[f].fully_valid() || !truth[f].fully_valid()) {
      throw std::invalid_argument("prediction_loss: occluded joints");
    }
    for (std::size_t j = 0; j < kJointCount; ++j) {
      se += (pred[f].joints[j] - truth[f].joints[j]).squaredNorm();
    }
    for (const Bone& bone : kBones) {
      const Vec3 bp = pred[f][bone.child] - pred[f][bone.parent];
      const Vec3 bt = truth[f][bone.child] - truth[f][bone.parent];
      const double denom = bp.norm() * bt.norm();
      if (denom <= 0.0) {
        throw std::invalid_argument("prediction_loss: zero-length bone");
      }
      bone_term += 1.0 - bp.dot(bt) / denom;
    }
  }
  const double n_coords = static_cast<double>(pred.size() * kJointCount * 3);
  const double n_bones = static_cast<double>(pred.size() * kBoneCount);
  return lw.lambda_p * se / n_coords + lw.lambda_b * bone_term / n_bones;
}

namespace detail {

// Occlusion fill: carry the last valid position forward; backfill a leading
// gap from the first valid sample. Joints with no valid sample stay invalid.
inline std::vector<Skeleton> fill_occlusions(const PoseWindow& w, int* filled_count) {
  std::vector<Skeleton> frames = w.frames;
  int filled = 0;
  for (std::size_t j = 0; j < kJointCount; ++j) {
    std::ptrdiff_t first_valid = -1;
    for (std::size_t f = 0; f < frames.size(); ++f) {
      if (frames[f].valid[j]) {
        first_valid = static_cast<std::ptrdiff_t>(f);
        break;
      }
    }
    if (first_valid < 0) continue;  // never observed in this window
    Vec3 last = frames[static_cast<std::size_t>(first_valid)].joints[j];
    for (std::size_t f = 0; f < frames.size(); ++f) {
      if (frames[f].valid[j]) {
        last = frames[f].joints[j];
      } else {
        frames[f].joints[j] = last;
        frames[f].valid[j] = true;
        ++filled;
      }
    }
  }
  if (filled_count != nullptr) *filled_count = filled;
  return frames;
}

}  // namespace detail

/// Per-joint linear least-squares fit over the window; step k of the
/// forecast extrapolates the last frame by k*dt along the fitted velocity.
/// Joints never observed in the window are forecast invalid.
inline PoseForecast predict_constant_velocity(const PoseWindow& w, int steps, double dt,
                                              std::span<const double> weights,
                                              int* filled_count = nullptr) {
  if (w.size() < 2) {
    throw std::invalid_argument("predict_constant_velocity: need at least 2 frames");
  }
  if (steps < 1 || weights.size() != static_cast<std::size_t>(steps)) {
    throw std::invalid_argument("predict_constant_velocity: bad horizon spec");
  }
  const std::vector<Skeleton> frames = detail::fill_occlusions(w, filled_count);
  const std::size_t n = frames.size();

  double t_mean = 0.0;
  for (double t : w.timestamps) t_mean += t;
  t_mean /= static_cast<double>(n);
  double t_var = 0.0;
  for (double t : w.timestamps) t_var += (t - t_mean) * (t - t_mean);

  std::array<Vec3, kJointCount> velocity{};
  std::array<bool, kJointCount> observed{};
  for (std::size_t j = 0; j < kJointCount; ++j) {
    observed[j] = frames.back().valid[j];
    if (!observed[j] || t_var <= 0.0) continue;
    Vec3 mean = Vec3::Zero();
    for (std::size_t f = 0; f < n; ++f) mean += frames[f].joints[j];
    mean /= static_cast<double>(n);
    Vec3 cov = Vec3::Zero();
    for (std::size_t f = 0; f < n; ++f) {
      cov += (w.timestamps[f] - t_mean) * (frames[f].joints[j] - mean);
    }
    velocity[j] = cov / t_var;
  }

  PoseForecast fc;
  fc.steps.reserve(static_cast<std::size_t>(steps));
  const Skeleton& last = frames.back();
  for (int k = 1; k <= steps; ++k) {
    ForecastStep step;
    step.time_offset = static_cast<double>(k) * dt;
    step.weight = weights[static_cast<std::size_t>(k - 1)];
    for (std::size_t j = 0; j < kJointCount; ++j) {
      if (!observed[j]) continue;
      step.skeleton.joints[j] = last.joints[j] + step.time_offset * velocity[j];
      step.skeleton.valid[j] = true;
    }
    fc.steps.push_back(std::move(step));
  }
  return fc;
}

/// Maps an observation window to a fixed-horizon forecast; the simulator
/// depends only on this contract.
class Forecaster {
 public:
  virtual ~Forecaster() = default;
  virtual PoseForecast forecast(const PoseWindow& w) const = 0;
};

class ConstantVelocityForecaster final : public Forecaster {
 public:
  ConstantVelocityForecaster(int steps = 10, double dt = 0.1,
                             std::vector<double> weights = geometric_weights(10))
      : steps_(steps), dt_(dt), weights_(std::move(weights)) {}

  PoseForecast forecast(const PoseWindow& w) const override {
    return predict_constant_velocity(w, steps_, dt_, weights_);
  }

 private:
  int steps_;
  double dt_;
  std::vector<double> weights_;
};

/// Degenerate forecaster that repeats the last observation; useful as an
/// ablation stub and as the fallback before the window has two frames.
class StaticForecaster final : public Forecaster {
 public:
  StaticForecaster(int steps = 10, double dt = 0.1,
                   std::vector<double> weights = geometric_weights(10))
      : steps_(steps), dt_(dt), weights_(std::move(weights)) {}

  PoseForecast forecast(const PoseWindow& w) const override {
    if (w.size() == 0) {
      throw std::invalid_argument("StaticForecaster: empty window");
    }
    PoseForecast fc;
    for (int k = 1; k <= steps_; ++k) {
      fc.steps.push_back(ForecastStep{w.frames.back(), weights_[static_cast<std::size_t>(k - 1)],
                                      static_cast<double>(k) * dt_});
    }
    return fc;
  }

 private:
  int steps_;
  double dt_;
  std::vector<double> weights_;
};

}  // namespace hap
