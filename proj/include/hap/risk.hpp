#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "hap/geometry.hpp"
#include "hap/kinematics.hpp"
#include "hap/perception.hpp"
#include "hap/prediction.hpp"

namespace hap {

/// Proximity potential parameters and the planner-invocation threshold.
struct ApfParams {
  double d_th = 0.5;                                     // influence radius, m
  double tau = 20.0;                                     // risk threshold
  std::vector<double> horizon_weights = geometric_weights(10);
};

/// Piecewise potential: 2 inside penetration, cosine falloff to zero at d_th.
inline double phi(double d, double d_th) {
  if (!(d_th > 0.0)) {
    throw std::invalid_argument("phi: d_th must be > 0");
  }
  if (d < 0.0) return 2.0;
  if (d > d_th) return 0.0;
  return std::cos(std::numbers::pi * d / (2.0 * d_th));
}

/// A forecast snapshot reduced to capsules, ready for repeated scoring.
/// Step 0 may be the current observation (weight 1) when built with
/// freeze_horizon(current, forecast, geo).
struct RiskHorizon {
  struct Step {
    std::vector<Capsule> capsules;
    double weight;
    double time_offset;
  };
  std::vector<Step> steps;

  bool unobserved() const {
    for (const Step& s : steps) {
      if (!s.capsules.empty()) return false;
    }
    return true;
  }
};

inline RiskHorizon freeze_horizon(const PoseForecast& fc, const HumanGeometry& geo) {
  RiskHorizon h;
  h.steps.reserve(fc.steps.size());
  for (const ForecastStep& s : fc.steps) {
    h.steps.push_back(RiskHorizon::Step{skeleton_capsules(s.skeleton, geo), s.weight, s.time_offset});
  }
  return h;
}

/// Prepends the current observation as step 0 with weight 1.
inline RiskHorizon freeze_horizon(const Skeleton& current, const PoseForecast& fc,
                                  const HumanGeometry& geo) {
  RiskHorizon h;
  h.steps.reserve(fc.steps.size() + 1);
  h.steps.push_back(RiskHorizon::Step{skeleton_capsules(current, geo), 1.0, 0.0});
  for (const ForecastStep& s : fc.steps) {
    h.steps.push_back(RiskHorizon::Step{skeleton_capsules(s.skeleton, geo), s.weight, s.time_offset});
  }
  return h;
}

struct RiskReport {
  double total = 0.0;
  std::vector<double> step_partials;
  double min_clearance = std::numeric_limits<double>::infinity();
  bool unobserved = false;

  /// Indices of the closest (robot link, human bone, horizon step) triple.
  struct PeakPair {
    int step;
    int robot_link;
    int human_bone;
  };
  std::optional<PeakPair> peak_pair;
};

/// Strict: the planner is invoked only when U is above tau, not at it.
inline bool exceeds_threshold(const RiskReport& r, double tau) { return r.total > tau; }

namespace detail {

// Accumulates one horizon step into the report in fixed (j, k) order.
inline void accumulate_step(const std::vector<Capsule>& robot,
                            const RiskHorizon::Step& step, int step_index, double d_th,
                            RiskReport& report) {
  double partial = 0.0;
  for (std::size_t j = 0; j < robot.size(); ++j) {
    for (std::size_t k = 0; k < step.capsules.size(); ++k) {
      const double d = capsule_capsule_distance(robot[j], step.capsules[k]);
      partial += step.weight * phi(d, d_th);
      if (d < report.min_clearance) {
        report.min_clearance = d;
        report.peak_pair = RiskReport::PeakPair{step_index, static_cast<int>(j),
                                                static_cast<int>(k)};
      }
    }
  }
  report.step_partials[static_cast<std::size_t>(step_index)] = partial;
  report.total += partial;
}

}  // namespace detail

/// Weighted potential sum over horizon steps x robot links x human bones,
/// accumulated in deterministic (step, link, bone) order.
inline RiskReport config_risk(const JointConfig& q, const RiskHorizon& horizon,
                              const DhChain& chain, const LinkGeometry& geo,
                              const ApfParams& params) {
  RiskReport report;
  report.step_partials.assign(horizon.steps.size(), 0.0);
  if (horizon.unobserved()) {
    report.unobserved = true;
    return report;
  }
  const std::vector<Capsule> robot = robot_capsules(chain, geo, q);
  for (std::size_t i = 0; i < horizon.steps.size(); ++i) {
    detail::accumulate_step(robot, horizon.steps[i], static_cast<int>(i), params.d_th, report);
  }
  return report;
}

/// Convenience overload that capsule-izes the forecast first.
inline RiskReport config_risk(const JointConfig& q, const PoseForecast& fc,
                              const DhChain& chain, const LinkGeometry& geo,
                              const HumanGeometry& human_geo, const ApfParams& params) {
  return config_risk(q, freeze_horizon(fc, human_geo), chain, geo, params);
}

/// Boolean risk gate with early exit once the running sum reaches `tau`.
/// Exact for the decision: every term is non-negative, so the partial sum
/// only grows.
inline bool risk_below(const JointConfig& q, const RiskHorizon& horizon, const DhChain& chain,
                       const LinkGeometry& geo, double d_th, double tau,
                       std::vector<Capsule>& scratch) {
  if (horizon.unobserved()) return true;
  robot_capsules(chain, geo, q, scratch);
  double sum = 0.0;
  for (const RiskHorizon::Step& step : horizon.steps) {
    for (const Capsule& rc : scratch) {
      for (const Capsule& hc : step.capsules) {
        sum += step.weight * phi(capsule_capsule_distance(rc, hc), d_th);
        if (sum >= tau) return false;
      }
    }
  }
  return true;
}

struct TimedConfig {
  JointConfig q;
  double time;  // seconds from the scoring instant
};

struct TrajectoryRisk {
  std::vector<RiskReport> per_waypoint;
  std::size_t max_index = 0;

  const RiskReport& max_report() const { return per_waypoint[max_index]; }
};

/// Scores each waypoint against the horizon step nearest its timestamp
/// (final step for waypoints beyond the horizon) and reports the argmax.
inline TrajectoryRisk trajectory_risk(std::span<const TimedConfig> path,
                                      const RiskHorizon& horizon, double horizon_s,
                                      const DhChain& chain, const LinkGeometry& geo,
                                      const ApfParams& params) {
  if (path.empty()) {
    throw std::invalid_argument("trajectory_risk: empty path");
  }
  for (std::size_t i = 1; i < path.size(); ++i) {
    if (path[i].time <= path[i - 1].time) {
      throw std::invalid_argument("trajectory_risk: timestamps must increase");
    }
  }
  TrajectoryRisk out;
  out.per_waypoint.reserve(path.size());
  std::vector<Capsule> robot;
  for (const TimedConfig& wp : path) {
    RiskReport report;
    report.step_partials.assign(horizon.steps.size(), 0.0);
    if (horizon.unobserved() || horizon.steps.empty()) {
      report.unobserved = horizon.unobserved();
      out.per_waypoint.push_back(std::move(report));
      continue;
    }
    std::size_t best = horizon.steps.size() - 1;
    if (wp.time <= horizon_s) {
      double best_gap = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < horizon.steps.size(); ++i) {
        const double gap = std::abs(horizon.steps[i].time_offset - wp.time);
        if (gap < best_gap) {
          best_gap = gap;
          best = i;
        }
      }
    }
    robot_capsules(chain, geo, wp.q, robot);
    detail::accumulate_step(robot, horizon.steps[best], static_cast<int>(best), params.d_th,
                            report);
    out.per_waypoint.push_back(std::move(report));
  }
  for (std::size_t i = 0; i < out.per_waypoint.size(); ++i) {
    if (out.per_waypoint[i].total > out.per_waypoint[out.max_index].total) {
      out.max_index = i;
    }
  }
  return out;
}

}  // namespace hap
