#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hap/planner.hpp"
#include "hap/prediction.hpp"
#include "hap/risk.hpp"

namespace hap {

enum class ScriptKind { kStatic, kWalk, kRecorded };

/// Scheduled observation dropout. `full` blanks every joint.
struct OcclusionWindow {
  double t0 = 0.0;
  double t1 = 0.0;
  bool full = false;
  std::vector<JointId> joints;
};

/// Parametric human motion: a fixed stance, a straight walk line past the
/// robot, or playback of a recorded pose file.
struct HumanScript {
  ScriptKind kind = ScriptKind::kWalk;

  // kStatic
  double static_x = 1.8;
  double static_y = 0.0;
  double static_heading = std::numbers::pi;  // facing the robot base

  // kWalk: along -y at fixed x offset from the base
  double walk_offset = 0.85;   // perpendicular distance from the base, m
  double walk_start_y = 2.6;   // m
  double walk_speed = 0.8;     // m/s
  double walk_delay = 0.0;     // s before the walk begins
  double delay_jitter = 1.0;   // per-seed uniform addition to walk_delay, s
  double offset_jitter = 0.05; // per-seed uniform +/- on walk_offset, m

  std::vector<OcclusionWindow> occlusions;

  // kRecorded
  std::vector<double> recorded_t;
  std::vector<Skeleton> recorded_frames;
};

struct RobotTask {
  JointConfig q_start;
  JointConfig q_goal;
  int cycles = 2;  // legs: start->goal counts one, goal->start the next
};

struct Scenario {
  std::string id = "S2";
  HumanScript human;
  RobotTask task;
  double duration = 120.0;  // s
};

/// Upright 15-joint stance. `root` places L3 (x, y used; ground at z=0),
/// `heading` is the facing direction in the xy plane.
inline Skeleton standing_skeleton(double x, double y, double heading) {
  const Vec3 fwd{std::cos(heading), std::sin(heading), 0.0};
  const Vec3 left{-std::sin(heading), std::cos(heading), 0.0};
  const Vec3 base{x, y, 0.0};
  Skeleton s;
  auto place = [&](JointId id, double lateral, double height, double forward = 0.0) {
    s.set(id, base + lateral * left + forward * fwd + Vec3{0.0, 0.0, height});
  };
  place(JointId::L3, 0.0, 1.15);
  place(JointId::C7, 0.0, 1.50);
  place(JointId::CLAV, 0.0, 1.47, 0.06);
  place(JointId::LSHO, 0.22, 1.45);
  place(JointId::RSHO, -0.22, 1.45);
  place(JointId::LAEL, 0.26, 1.16);
  place(JointId::RAEL, -0.26, 1.16);
  place(JointId::LWPS, 0.28, 0.88);
  place(JointId::RWPS, -0.28, 0.88);
  place(JointId::LHIP, 0.12, 0.95);
  place(JointId::RHIP, -0.12, 0.95);
  place(JointId::LKNE, 0.12, 0.50);
  place(JointId::RKNE, -0.12, 0.50);
  place(JointId::LHEE, 0.12, 0.03);
  place(JointId::RHEE, -0.12, 0.03);
  return s;
}

namespace detail {

inline Skeleton script_truth(const HumanScript& script, double t) {
  switch (script.kind) {
    case ScriptKind::kStatic:
      return standing_skeleton(script.static_x, script.static_y, script.static_heading);
    case ScriptKind::kWalk: {
      const double progress = std::max(0.0, t - script.walk_delay);
      const double y = script.walk_start_y - script.walk_speed * progress;
      return standing_skeleton(script.walk_offset, y, -std::numbers::pi / 2.0);
    }
    case ScriptKind::kRecorded: {
      // Step playback: most recent frame at or before t.
      std::size_t idx = 0;
      while (idx + 1 < script.recorded_t.size() && script.recorded_t[idx + 1] <= t) ++idx;
      return script.recorded_frames[idx];
    }
  }
  throw std::logic_error("script_truth: bad kind");
}

inline void apply_occlusions(const HumanScript& script, double t, Skeleton& s) {
  for (const OcclusionWindow& w : script.occlusions) {
    if (t < w.t0 || t >= w.t1) continue;
    if (w.full) {
      s.valid.fill(false);
    } else {
      for (JointId j : w.joints) {
        s.valid[static_cast<std::size_t>(j)] = false;
      }
    }
  }
}

}  // namespace detail

/// Ground-truth pose with the occlusion schedule applied to validity flags.
/// Rejects t outside [0, duration].
inline Skeleton scripted_pose(const Scenario& scenario, double t) {
  if (t < 0.0 || t > scenario.duration) {
    throw std::invalid_argument("scripted_pose: t outside trial duration");
  }
  Skeleton s = detail::script_truth(scenario.human, t);
  detail::apply_occlusions(scenario.human, t, s);
  return s;
}

/// True pose regardless of occlusion; clearance accounting uses this.
inline Skeleton scripted_truth(const Scenario& scenario, double t) {
  if (t < 0.0 || t > scenario.duration) {
    throw std::invalid_argument("scripted_truth: t outside trial duration");
  }
  return detail::script_truth(scenario.human, t);
}

struct SimParams {
  double dt = 0.1;                // control period, s
  double speed_cap = 1.0;         // per-joint speed limit, rad/s
  double trial_budget = 120.0;    // simulated seconds
  double workspace_radius = 1.4;  // conservatism radius for full occlusion, m
  int window_frames = 30;
  int horizon_steps = 10;
  double horizon_decay = 0.9;
  double replan_horizon = 1.0;    // rescored prefix length, s
};

struct ReplanEvent {
  int tick = 0;
  bool trigger_driven = false;  // false for nominal leg plans
  PlanResult::Status status = PlanResult::Status::kTimeout;
  double wall_s = 0.0;
  int nodes_explored = 0;
  int nodes_used = 0;
};

struct TrialMetrics {
  double min_clearance_mm = std::numeric_limits<double>::infinity();
  int replans = 0;  // trigger-driven episodes
  bool coverage = false;
  bool intrusion = false;  // any tick saw risk above tau
  bool completed = false;
  double hold_time_s = 0.0;
  double sim_time_s = 0.0;
  int filled_joint_ticks = 0;
  std::vector<ReplanEvent> events;
};

struct TrialResult {
  TrialMetrics metrics;
  std::vector<std::string> trace;  // JSON-lines, one record per tick
};

enum class SimMode { kExecuting, kHolding, kReplanning };

inline const char* to_string(SimMode m) {
  switch (m) {
    case SimMode::kExecuting: return "executing";
    case SimMode::kHolding: return "holding";
    case SimMode::kReplanning: return "replanning";
  }
  return "?";
}

/// Per-trial mutable state; one tick advances the clock by exactly dt.
struct SimState {
  double clock = 0.0;
  int tick = 0;
  JointConfig q;
  std::vector<JointConfig> exec_path;
  std::size_t progress = 0;
  int legs_done = 0;
  JointConfig current_target;
  PoseWindow history;
  SimMode mode = SimMode::kExecuting;
  bool task_complete = false;
  bool human_ever_seen = false;
  bool last_seen_in_workspace = true;  // conservative until first sighting
  int plans_attempted = 0;
  int first_replan_tick = -1;
  int first_close_tick = -1;  // first tick with true clearance < d_th
};

/// Deterministic 10 Hz closed-loop engine: observe, forecast, rescore,
/// hold/replan, execute, record.
class TrialRunner {
 public:
  TrialRunner(Scenario scenario, DhChain chain, LinkGeometry links, HumanGeometry human_geo,
              ApfParams apf, PlannerParams planner, SimParams sim,
              std::shared_ptr<const Forecaster> forecaster = nullptr)
      : scenario_(std::move(scenario)),
        chain_(std::move(chain)),
        links_(std::move(links)),
        human_geo_(human_geo),
        apf_(std::move(apf)),
        planner_(planner),
        sim_(sim),
        forecaster_(std::move(forecaster)) {
    if (!forecaster_) {
      forecaster_ = std::make_shared<ConstantVelocityForecaster>(
          sim_.horizon_steps, sim_.dt, geometric_weights(sim_.horizon_steps, sim_.horizon_decay));
    }
    self_pairs_ = default_self_pairs(chain_, links_);
  }

  TrialResult run(std::uint64_t seed) {
    Scenario scenario = resolve_jitter(seed);
    TrialResult out;
    SimState st;
    st.q = wrap(scenario.task.q_start);
    st.current_target = wrap(scenario.task.q_goal);
    seed_ = seed;

    const int max_ticks = static_cast<int>(std::round(
        std::min(sim_.trial_budget, scenario.duration) / sim_.dt));
    while (st.tick < max_ticks && !st.task_complete) {
      step(scenario, st, out);
    }
    out.metrics.completed = st.task_complete;
    out.metrics.sim_time_s = st.clock;
    out.metrics.coverage =
        out.metrics.replans >= 1 &&
        (st.first_close_tick < 0 || st.first_replan_tick < st.first_close_tick);
    return out;
  }

  /// One closed-loop step; exposed for state-machine tests.
  void step(const Scenario& scenario, SimState& st, TrialResult& out) {
    const Skeleton observed = scripted_pose(scenario, st.clock);
    const Skeleton truth = scripted_truth(scenario, st.clock);
    st.history.push(st.clock, observed);
    st.history.trim_to(static_cast<std::size_t>(sim_.window_frames));

    int filled = count_fillable(st.history, observed);
    if (filled > 0) ++out.metrics.filled_joint_ticks;

    const std::vector<Capsule> observed_caps = skeleton_capsules(observed, human_geo_);
    const bool fully_occluded = observed_caps.empty();
    if (!fully_occluded) {
      st.human_ever_seen = true;
      st.last_seen_in_workspace = within_workspace(observed);
    }

    const PoseForecast forecast = make_forecast(st.history);
    RiskHorizon horizon = freeze_horizon(observed, forecast, human_geo_);

    // Trigger rule: the full weighted horizon sum, evaluated at the current
    // pose and at each upcoming waypoint of the active path. This is the
    // same gate the planner prunes against, so a replan invoked here always
    // starts from a config the planner itself accepts.
    const RiskReport now_risk = config_risk(st.q, horizon, chain_, links_, apf_);
    double prefix_max_u = 0.0;
    if (!st.exec_path.empty() && st.progress + 1 < st.exec_path.size()) {
      for (std::size_t i = st.progress + 1; i < st.exec_path.size(); ++i) {
        const double t_wp = static_cast<double>(i - st.progress) * sim_.dt;
        if (t_wp > sim_.replan_horizon) break;
        const RiskReport wp = config_risk(st.exec_path[i], horizon, chain_, links_, apf_);
        prefix_max_u = std::max(prefix_max_u, wp.total);
      }
    }
    const bool trigger = now_risk.total > apf_.tau || prefix_max_u > apf_.tau;
    if (trigger) out.metrics.intrusion = true;

    nlohmann::json rec;
    const bool conservative_hold = fully_occluded && st.last_seen_in_workspace;

    if (conservative_hold) {
      // No trustworthy observation while the human may be close: freeze.
      st.mode = SimMode::kHolding;
    } else if (st.exec_path.empty()) {
      run_plan(scenario, st, out, horizon, /*trigger_driven=*/false, rec);
    } else if (trigger) {
      run_plan(scenario, st, out, horizon, /*trigger_driven=*/true, rec);
    } else {
      st.mode = SimMode::kExecuting;
      advance(scenario, st);
    }

    if (st.mode != SimMode::kExecuting) {
      out.metrics.hold_time_s += sim_.dt;
    }

    const double clearance = true_clearance(truth, st.q);
    out.metrics.min_clearance_mm = std::min(out.metrics.min_clearance_mm, clearance * 1000.0);
    if (clearance < apf_.d_th && st.first_close_tick < 0) {
      st.first_close_tick = st.tick;
    }

    rec["tick"] = st.tick;
    rec["t"] = st.clock;
    rec["mode"] = to_string(st.mode);
    rec["q"] = st.q.q;
    rec["u"] = now_risk.total;
    rec["u_prefix"] = prefix_max_u;
    rec["clearance_mm"] = clearance * 1000.0;
    rec["waypoint"] = st.progress;
    rec["occluded"] = fully_occluded;
    rec["filled"] = filled;
    out.trace.push_back(rec.dump());

    st.clock += sim_.dt;
    ++st.tick;
  }

  const DhChain& chain() const { return chain_; }
  const LinkGeometry& links() const { return links_; }
  const HumanGeometry& human_geometry() const { return human_geo_; }
  const ApfParams& apf() const { return apf_; }

  /// Applies the per-seed timing/offset jitter to the walk script.
  Scenario resolve_jitter(std::uint64_t seed) const {
    Scenario scenario = scenario_;
    if (scenario.human.kind == ScriptKind::kWalk) {
      std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
      std::uniform_real_distribution<double> u01(0.0, 1.0);
      scenario.human.walk_delay += u01(rng) * scenario.human.delay_jitter;
      scenario.human.walk_offset += (u01(rng) - 0.5) * 2.0 * scenario.human.offset_jitter;
    }
    return scenario;
  }

 private:
  PoseForecast make_forecast(const PoseWindow& window) const {
    const std::vector<double> weights = geometric_weights(sim_.horizon_steps, sim_.horizon_decay);
    if (window.size() < 2) {
      StaticForecaster fallback(sim_.horizon_steps, sim_.dt, weights);
      return fallback.forecast(window);
    }
    return forecaster_->forecast(window);
  }

  static int count_fillable(const PoseWindow& window, const Skeleton& current) {
    int n = 0;
    for (std::size_t j = 0; j < kJointCount; ++j) {
      if (current.valid[j]) continue;
      for (const Skeleton& f : window.frames) {
        if (f.valid[j]) {
          ++n;
          break;
        }
      }
    }
    return n;
  }

  bool within_workspace(const Skeleton& s) const {
    const Vec3 base = chain_.base.translation();
    for (std::size_t j = 0; j < kJointCount; ++j) {
      if (!s.valid[j]) continue;
      const Vec3 d = s.joints[j] - base;
      if (std::hypot(d.x(), d.y()) <= sim_.workspace_radius) return true;
    }
    return false;
  }

  void run_plan(const Scenario& scenario, SimState& st, TrialResult& out,
                RiskHorizon& horizon, bool trigger_driven, nlohmann::json& rec) {
    st.mode = trigger_driven ? SimMode::kReplanning : SimMode::kHolding;
    if (trigger_driven) {
      const bool new_episode = out.metrics.events.empty() ||
                               out.metrics.events.back().tick != st.tick - 1 ||
                               !out.metrics.events.back().trigger_driven;
      if (new_episode) {
        ++out.metrics.replans;
        if (st.first_replan_tick < 0) st.first_replan_tick = st.tick;
      }
    }

    PlannerParams params = planner_;
    params.seed = seed_ * 1000003ull + static_cast<std::uint64_t>(st.plans_attempted++);
    PlanningScene scene;
    scene.chain = chain_;
    scene.links = links_;
    scene.horizon = std::move(horizon);
    scene.apf = apf_;
    scene.self_pairs = self_pairs_;
    const PlanResult res = plan(st.q, st.current_target, scene, params);
    horizon = std::move(scene.horizon);

    ReplanEvent ev;
    ev.tick = st.tick;
    ev.trigger_driven = trigger_driven;
    ev.status = res.status;
    ev.wall_s = res.wall_time_s;
    ev.nodes_explored = res.nodes_explored;
    ev.nodes_used = res.nodes_used;
    out.metrics.events.push_back(ev);

    rec["replan"] = {{"trigger", trigger_driven},
                     {"status", to_string(res.status)},
                     {"nodes_explored", res.nodes_explored},
                     {"nodes_used", res.nodes_used}};

    if (res.status == PlanResult::Status::kSuccess) {
      st.exec_path = densify_path(res.path, sim_.speed_cap * sim_.dt);
      st.progress = 0;
      // A zero-length leg completes immediately.
      while (!st.exec_path.empty() && st.progress + 1 >= st.exec_path.size() &&
             !st.task_complete) {
        complete_leg(scenario, st);
      }
    }
  }

  void advance(const Scenario& scenario, SimState& st) {
    if (st.exec_path.empty()) return;
    if (st.progress + 1 < st.exec_path.size()) {
      ++st.progress;
      st.q = st.exec_path[st.progress];
    }
    if (st.progress + 1 >= st.exec_path.size()) {
      complete_leg(scenario, st);
    }
  }

  void complete_leg(const Scenario& scenario, SimState& st) {
    ++st.legs_done;
    st.exec_path.clear();
    st.progress = 0;
    if (st.legs_done >= scenario.task.cycles) {
      st.task_complete = true;
      return;
    }
    const JointConfig a = wrap(scenario.task.q_start);
    const JointConfig b = wrap(scenario.task.q_goal);
    st.current_target = (st.legs_done % 2 == 0) ? b : a;
  }

  double true_clearance(const Skeleton& truth, const JointConfig& q) const {
    Skeleton all_valid = truth;
    all_valid.valid.fill(true);
    const std::vector<Capsule> human = skeleton_capsules(all_valid, human_geo_);
    const std::vector<Capsule> robot = robot_capsules(chain_, links_, q);
    double best = std::numeric_limits<double>::infinity();
    for (const Capsule& rc : robot) {
      for (const Capsule& hc : human) {
        best = std::min(best, capsule_capsule_distance(rc, hc));
      }
    }
    return best;
  }

  Scenario scenario_;
  DhChain chain_;
  LinkGeometry links_;
  HumanGeometry human_geo_;
  ApfParams apf_;
  PlannerParams planner_;
  SimParams sim_;
  std::shared_ptr<const Forecaster> forecaster_;
  std::vector<std::pair<int, int>> self_pairs_;
  std::uint64_t seed_ = 0;
};

/// Convenience wrapper mirroring the trial contract.
inline TrialResult run_trial(const Scenario& scenario, const DhChain& chain,
                             const LinkGeometry& links, const HumanGeometry& human_geo,
                             const ApfParams& apf, const PlannerParams& planner,
                             const SimParams& sim, std::uint64_t seed,
                             std::shared_ptr<const Forecaster> forecaster = nullptr) {
  TrialRunner runner(scenario, chain, links, human_geo, apf, planner, sim,
                     std::move(forecaster));
  return runner.run(seed);
}

}  // namespace hap
