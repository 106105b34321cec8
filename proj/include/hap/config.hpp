#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hap/io.hpp"
#include "hap/sim.hpp"

namespace hap {

/// Everything a run needs: robot model, risk/planner/sim parameters,
/// scenario scripts and the seed list.
struct AppConfig {
  DhChain chain = ur16e_chain();
  LinkGeometry links = default_link_geometry();
  HumanGeometry human_geo = HumanGeometry::defaults();
  ApfParams apf;
  PlannerParams planner;
  SimParams sim;
  std::vector<Scenario> scenarios;
  std::vector<std::uint64_t> seeds;
};

namespace detail {

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) {
    out = it->get<T>();
  }
}

inline JointId joint_from_name(const std::string& name) {
  for (int i = 0; i < kJointCount; ++i) {
    if (kJointNames[static_cast<std::size_t>(i)] == name) return static_cast<JointId>(i);
  }
  throw std::invalid_argument("unknown joint name: " + name);
}

inline JointConfig joint_config_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != kNumJoints) {
    throw std::invalid_argument("joint config must be an array of 6 angles");
  }
  JointConfig q;
  for (int i = 0; i < kNumJoints; ++i) q[i] = j[static_cast<std::size_t>(i)].get<double>();
  return q;
}

inline HumanScript default_human_script(const std::string& id) {
  HumanScript h;
  if (id == "S1") {
    h.kind = ScriptKind::kStatic;
  } else {
    h.kind = ScriptKind::kWalk;
    if (id == "S3") {
      h.occlusions.push_back(OcclusionWindow{2.0, 4.0, false, {JointId::LAEL, JointId::LWPS}});
      h.occlusions.push_back(OcclusionWindow{3.0, 3.5, true, {}});
    }
  }
  return h;
}

inline RobotTask default_task() {
  RobotTask t;
  t.q_start = JointConfig{{1.57, -1.0, 1.2, -1.77, -1.57, 0.0}};
  t.q_goal = JointConfig{{-2.11, -1.0, 1.2, -1.77, -1.57, 0.0}};
  t.cycles = 2;
  return t;
}

inline HumanScript parse_human(const nlohmann::json& j, HumanScript h,
                               const std::filesystem::path& base_dir) {
  if (auto it = j.find("kind"); it != j.end()) {
    const std::string kind = it->get<std::string>();
    if (kind == "static") h.kind = ScriptKind::kStatic;
    else if (kind == "walk") h.kind = ScriptKind::kWalk;
    else if (kind == "recorded") h.kind = ScriptKind::kRecorded;
    else throw std::invalid_argument("human.kind must be static|walk|recorded");
  }
  read_field(j, "static_x_m", h.static_x);
  read_field(j, "static_y_m", h.static_y);
  read_field(j, "static_heading_rad", h.static_heading);
  read_field(j, "walk_offset_m", h.walk_offset);
  read_field(j, "walk_start_y_m", h.walk_start_y);
  read_field(j, "walk_speed_mps", h.walk_speed);
  read_field(j, "walk_delay_s", h.walk_delay);
  read_field(j, "delay_jitter_s", h.delay_jitter);
  read_field(j, "offset_jitter_m", h.offset_jitter);
  if (auto it = j.find("occlusions"); it != j.end()) {
    h.occlusions.clear();
    for (const auto& w : *it) {
      OcclusionWindow win;
      win.t0 = w.at("t0_s").get<double>();
      win.t1 = w.at("t1_s").get<double>();
      read_field(w, "full", win.full);
      if (auto jt = w.find("joints"); jt != w.end()) {
        for (const auto& name : *jt) win.joints.push_back(joint_from_name(name.get<std::string>()));
      }
      h.occlusions.push_back(std::move(win));
    }
  }
  if (auto it = j.find("pose_file"); it != j.end()) {
    h.kind = ScriptKind::kRecorded;
    const std::filesystem::path p = base_dir / it->get<std::string>();
    const PoseSequence seq = read_pose_file(p.string());
    h.recorded_t = seq.timestamps;
    h.recorded_frames = seq.frames;
  }
  return h;
}

inline Scenario parse_scenario(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  Scenario s;
  read_field(j, "id", s.id);
  s.human = default_human_script(s.id);
  s.task = default_task();
  read_field(j, "duration_s", s.duration);
  if (auto it = j.find("human"); it != j.end()) {
    s.human = parse_human(*it, s.human, base_dir);
  }
  if (auto it = j.find("task"); it != j.end()) {
    if (auto q = it->find("q_start_rad"); q != it->end()) s.task.q_start = joint_config_from(*q);
    if (auto q = it->find("q_goal_rad"); q != it->end()) s.task.q_goal = joint_config_from(*q);
    read_field(*it, "cycles", s.task.cycles);
  }
  return s;
}

inline DhChain parse_chain(const nlohmann::json& j) {
  DhChain chain;
  const auto& rows = j.at("dh_rows");
  if (!rows.is_array() || rows.size() != kNumJoints) {
    throw std::invalid_argument("chain.dh_rows must have exactly 6 rows");
  }
  for (int i = 0; i < kNumJoints; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    chain.rows[static_cast<std::size_t>(i)] =
        DhRow{r.at("a_m").get<double>(), r.at("d_m").get<double>(),
              r.at("alpha_rad").get<double>(), r.value("theta_offset_rad", 0.0)};
  }
  Eigen::Isometry3d base = Eigen::Isometry3d::Identity();
  if (auto it = j.find("base_xyz_m"); it != j.end()) {
    base.translation() =
        Vec3{(*it)[0].get<double>(), (*it)[1].get<double>(), (*it)[2].get<double>()};
  }
  if (auto it = j.find("base_rpy_rad"); it != j.end()) {
    const double r = (*it)[0].get<double>(), p = (*it)[1].get<double>(),
                 y = (*it)[2].get<double>();
    base.linear() = (Eigen::AngleAxisd(y, Vec3::UnitZ()) * Eigen::AngleAxisd(p, Vec3::UnitY()) *
                     Eigen::AngleAxisd(r, Vec3::UnitX()))
                        .toRotationMatrix();
  }
  chain.base = base;
  return chain;
}

inline LinkGeometry parse_links(const nlohmann::json& j) {
  LinkGeometry geo;
  for (const auto& l : j) {
    geo.links.push_back(LinkCapsule{l.at("from_frame").get<int>(), l.at("to_frame").get<int>(),
                                    l.at("radius_m").get<double>()});
  }
  return geo;
}

}  // namespace detail

/// Parses a config JSON document. Paths inside the document resolve
/// relative to `base_dir`. Throws std::invalid_argument on malformed input.
inline AppConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  AppConfig cfg;

  if (auto it = j.find("chain"); it != j.end()) {
    nlohmann::json chain_json;
    if (it->is_string()) {
      const std::filesystem::path p = base_dir / it->get<std::string>();
      std::ifstream in(p);
      if (!in) throw std::invalid_argument("chain file not readable: " + p.string());
      in >> chain_json;
    } else {
      chain_json = *it;
    }
    cfg.chain = detail::parse_chain(chain_json);
    if (auto l = chain_json.find("links"); l != chain_json.end()) {
      cfg.links = detail::parse_links(*l);
    }
  }

  if (auto it = j.find("human_geometry"); it != j.end()) {
    double limb = 0.08, torso = 0.15;
    detail::read_field(*it, "limb_radius_m", limb);
    detail::read_field(*it, "torso_radius_m", torso);
    cfg.human_geo = HumanGeometry::defaults(limb, torso);
    if (auto br = it->find("bone_radii_m"); br != it->end()) {
      if (!br->is_array() || br->size() != kBoneCount) {
        throw std::invalid_argument("human_geometry.bone_radii_m must have 14 entries");
      }
      for (int b = 0; b < kBoneCount; ++b) {
        cfg.human_geo.bone_radius[static_cast<std::size_t>(b)] =
            (*br)[static_cast<std::size_t>(b)].get<double>();
      }
    }
  }

  if (auto it = j.find("apf"); it != j.end()) {
    detail::read_field(*it, "d_th_m", cfg.apf.d_th);
    detail::read_field(*it, "tau", cfg.apf.tau);
    double decay = 0.9;
    detail::read_field(*it, "horizon_decay", decay);
    cfg.sim.horizon_decay = decay;
    cfg.apf.horizon_weights = geometric_weights(cfg.sim.horizon_steps, decay);
  }

  if (auto it = j.find("planner"); it != j.end()) {
    detail::read_field(*it, "goal_bias", cfg.planner.goal_bias);
    detail::read_field(*it, "gauss_std_rad", cfg.planner.gauss_std);
    detail::read_field(*it, "step_rad", cfg.planner.step);
    detail::read_field(*it, "rewire_radius_rad", cfg.planner.rewire_radius);
    detail::read_field(*it, "connect_threshold_rad", cfg.planner.connect_threshold);
    detail::read_field(*it, "max_nodes", cfg.planner.max_nodes);
    detail::read_field(*it, "t_max_s", cfg.planner.t_max);
    detail::read_field(*it, "edge_resolution_rad", cfg.planner.edge_resolution);
    detail::read_field(*it, "shortcut_iters", cfg.planner.shortcut_iters);
  }

  if (auto it = j.find("sim"); it != j.end()) {
    detail::read_field(*it, "dt_s", cfg.sim.dt);
    detail::read_field(*it, "speed_cap_rad_s", cfg.sim.speed_cap);
    detail::read_field(*it, "trial_budget_s", cfg.sim.trial_budget);
    detail::read_field(*it, "workspace_radius_m", cfg.sim.workspace_radius);
    detail::read_field(*it, "window_frames", cfg.sim.window_frames);
    detail::read_field(*it, "horizon_steps", cfg.sim.horizon_steps);
    detail::read_field(*it, "replan_horizon_s", cfg.sim.replan_horizon);
    cfg.apf.horizon_weights = geometric_weights(cfg.sim.horizon_steps, cfg.sim.horizon_decay);
  }

  if (auto it = j.find("scenarios"); it != j.end()) {
    for (const auto& s : *it) cfg.scenarios.push_back(detail::parse_scenario(s, base_dir));
  } else if (auto s = j.find("scenario"); s != j.end()) {
    cfg.scenarios.push_back(detail::parse_scenario(*s, base_dir));
  }

  if (auto it = j.find("seeds"); it != j.end()) {
    for (const auto& s : *it) cfg.seeds.push_back(s.get<std::uint64_t>());
  }
  if (cfg.seeds.empty()) {
    for (std::uint64_t s = 1; s <= 20; ++s) cfg.seeds.push_back(s);
  }
  return cfg;
}

struct ConfigLoad {
  std::optional<AppConfig> config;
  bool file_missing = false;
  std::vector<std::string> errors;
};

inline ConfigLoad load_config(const std::string& path) {
  ConfigLoad out;
  if (!std::filesystem::exists(path)) {
    out.file_missing = true;
    out.errors.push_back("config file not found: " + path);
    return out;
  }
  std::ifstream in(path);
  nlohmann::json j;
  try {
    in >> j;
    out.config = parse_config(j, std::filesystem::path(path).parent_path());
  } catch (const std::exception& e) {
    out.errors.push_back(std::string("config parse error: ") + e.what());
  }
  return out;
}

/// Schema and invariant checks; returns human-readable violations.
inline std::vector<std::string> validate_config(const AppConfig& cfg) {
  std::vector<std::string> errs;
  auto require = [&errs](bool ok, const std::string& msg) {
    if (!ok) errs.push_back(msg);
  };

  require(cfg.apf.tau > 0.0, "apf.tau must be > 0");
  require(cfg.apf.d_th > 0.0, "apf.d_th_m must be > 0");
  for (double w : cfg.apf.horizon_weights) {
    require(w > 0.0 && w <= 1.0, "horizon weights must lie in (0, 1]");
  }
  for (std::size_t i = 1; i < cfg.apf.horizon_weights.size(); ++i) {
    require(cfg.apf.horizon_weights[i] <= cfg.apf.horizon_weights[i - 1],
            "horizon weights must be non-increasing");
  }

  for (const LinkCapsule& l : cfg.links.links) {
    require(l.radius > 0.0, "link capsule radius must be > 0");
    require(l.from_frame >= 0 && l.to_frame < kNumFrames && l.from_frame < l.to_frame,
            "link capsule frames out of range");
  }
  require(!cfg.links.links.empty(), "at least one link capsule required");
  for (double r : cfg.human_geo.bone_radius) {
    require(r > 0.0, "human bone radius must be > 0");
  }

  require(cfg.planner.goal_bias >= 0.0 && cfg.planner.goal_bias <= 1.0,
          "planner.goal_bias must lie in [0, 1]");
  require(cfg.planner.gauss_std > 0.0, "planner.gauss_std_rad must be > 0");
  require(cfg.planner.step > 0.0, "planner.step_rad must be > 0");
  require(cfg.planner.rewire_radius > 0.0, "planner.rewire_radius_rad must be > 0");
  require(cfg.planner.connect_threshold > 0.0, "planner.connect_threshold_rad must be > 0");
  require(cfg.planner.max_nodes >= 2, "planner.max_nodes must be >= 2");
  require(cfg.planner.t_max > 0.0, "planner.t_max_s must be > 0");
  require(cfg.planner.edge_resolution > 0.0, "planner.edge_resolution_rad must be > 0");

  require(cfg.sim.dt > 0.0, "sim.dt_s must be > 0");
  require(cfg.sim.speed_cap > 0.0, "sim.speed_cap_rad_s must be > 0");
  require(cfg.sim.trial_budget > 0.0, "sim.trial_budget_s must be > 0");
  require(cfg.sim.window_frames >= 2, "sim.window_frames must be >= 2");
  require(cfg.sim.horizon_steps >= 1, "sim.horizon_steps must be >= 1");

  require(!cfg.seeds.empty(), "seed list must not be empty");
  require(!cfg.scenarios.empty(), "at least one scenario required");

  for (const Scenario& s : cfg.scenarios) {
    const std::string tag = "scenario '" + s.id + "': ";
    require(!s.id.empty(), "scenario id must not be empty");
    require(s.duration > 0.0, tag + "duration_s must be > 0");
    require(s.task.cycles >= 1, tag + "task.cycles must be >= 1");
    if (s.human.kind == ScriptKind::kWalk) {
      require(s.human.walk_speed > 0.0, tag + "walk_speed_mps must be > 0");
    }
    if (s.human.kind == ScriptKind::kRecorded) {
      require(!s.human.recorded_frames.empty(), tag + "recorded pose script is empty");
      if (!s.human.recorded_t.empty()) {
        require(s.human.recorded_t.back() >= s.duration,
                tag + "recorded pose script does not cover the trial duration");
      }
    }
    for (const OcclusionWindow& w : s.human.occlusions) {
      require(w.t1 > w.t0, tag + "occlusion window must have t1 > t0");
    }
    // Start and goal must be valid against the human's t = 0 pose.
    try {
      const Skeleton pose0 = scripted_truth(s, 0.0);
      ApfParams apf = cfg.apf;
      PoseForecast empty_fc;
      RiskHorizon horizon = freeze_horizon(pose0, empty_fc, cfg.human_geo);
      PlanningScene scene = make_scene(cfg.chain, cfg.links, std::move(horizon), apf);
      std::vector<Capsule> scratch;
      require(scene.config_valid(wrap(s.task.q_start), scratch),
              tag + "q_start violates risk/collision limits at t = 0");
      require(scene.config_valid(wrap(s.task.q_goal), scratch),
              tag + "q_goal violates risk/collision limits at t = 0");
    } catch (const std::exception& e) {
      errs.push_back(tag + "start/goal check failed: " + e.what());
    }
  }
  return errs;
}

}  // namespace hap
