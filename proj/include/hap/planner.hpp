#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hap/kinematics.hpp"
#include "hap/risk.hpp"

namespace hap {

struct PlannerParams {
  double goal_bias = 0.10;         // probability of sampling around the target root
  double gauss_std = 0.5;          // per-joint std of the goal-biased sample, rad
  double step = 0.15;              // steering step, rad (wrapped Euclidean)
  double rewire_radius = 0.45;     // neighbor radius for parent choice / rewiring, rad
  double connect_threshold = 0.15; // max bridge length between trees, rad
  int max_nodes = 2000;            // total across both trees
  double t_max = 2.0;              // wall-clock cap, s
  double edge_resolution = 0.05;   // interpolation spacing for edge checks, rad (max-norm)
  int shortcut_iters = 100;
  std::uint64_t seed = 0;
};

/// Static planning context: robot model, frozen human forecast, risk gate,
/// floor half-space and self-collision pair set. Immutable during plan().
struct PlanningScene {
  DhChain chain;
  LinkGeometry links;
  RiskHorizon horizon;  // frozen at planner invocation; may be empty
  ApfParams apf;
  double floor_z = 0.0;
  std::vector<std::pair<int, int>> self_pairs;

  bool capsules_collision_free(const std::vector<Capsule>& caps) const {
    for (const auto& [i, j] : self_pairs) {
      if (capsule_capsule_distance(caps[static_cast<std::size_t>(i)],
                                   caps[static_cast<std::size_t>(j)]) < 0.0) {
        return false;
      }
    }
    for (std::size_t i = 0; i < caps.size(); ++i) {
      if (links.links[i].from_frame == 0) continue;  // fixed base column
      const Capsule& c = caps[i];
      if (std::min(c.axis.a.z(), c.axis.b.z()) - c.radius < floor_z) return false;
    }
    return true;
  }

  bool capsules_risk_below_tau(const std::vector<Capsule>& caps) const {
    double sum = 0.0;
    for (const RiskHorizon::Step& step : horizon.steps) {
      for (const Capsule& rc : caps) {
        for (const Capsule& hc : step.capsules) {
          sum += step.weight * phi(capsule_capsule_distance(rc, hc), apf.d_th);
          if (sum >= apf.tau) return false;
        }
      }
    }
    return true;
  }

  bool risk_ok(const JointConfig& q, std::vector<Capsule>& scratch) const {
    robot_capsules(chain, links, q, scratch);
    return capsules_risk_below_tau(scratch);
  }

  bool config_valid(const JointConfig& q, std::vector<Capsule>& scratch) const {
    robot_capsules(chain, links, q, scratch);
    return capsules_collision_free(scratch) && capsules_risk_below_tau(scratch);
  }

  /// Checks interpolated configs from q1 (exclusive) to q2 (inclusive).
  bool edge_valid(const JointConfig& q1, const JointConfig& q2, double resolution,
                  std::vector<Capsule>& scratch) const {
    const auto delta = wrapped_delta(q1, q2);
    double cheb = 0.0;
    for (double v : delta) cheb = std::max(cheb, std::abs(v));
    const int n = std::max(1, static_cast<int>(std::ceil(cheb / resolution)));
    for (int k = 1; k <= n; ++k) {
      const double f = static_cast<double>(k) / static_cast<double>(n);
      JointConfig qk;
      for (int i = 0; i < kNumJoints; ++i) {
        qk[i] = wrap_angle(q1[i] + f * delta[static_cast<std::size_t>(i)]);
      }
      if (!config_valid(qk, scratch)) return false;
    }
    return true;
  }
};

/// Self-collision pairs for a chain: non-adjacent link pairs, minus pairs
/// already interpenetrating at the zero configuration (permanently-near
/// neighbors such as wrist clusters).
inline std::vector<std::pair<int, int>> default_self_pairs(const DhChain& chain,
                                                           const LinkGeometry& geo,
                                                           double margin = 0.005) {
  const std::vector<Capsule> caps = robot_capsules(chain, geo, JointConfig{});
  std::vector<std::pair<int, int>> pairs;
  const int n = static_cast<int>(geo.links.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 2; j < n; ++j) {
      if (capsule_capsule_distance(caps[static_cast<std::size_t>(i)],
                                   caps[static_cast<std::size_t>(j)]) < margin) {
        continue;
      }
      pairs.emplace_back(i, j);
    }
  }
  return pairs;
}

inline PlanningScene make_scene(const DhChain& chain, const LinkGeometry& links,
                                RiskHorizon horizon, const ApfParams& apf,
                                double floor_z = 0.0) {
  PlanningScene scene;
  scene.chain = chain;
  scene.links = links;
  scene.horizon = std::move(horizon);
  scene.apf = apf;
  scene.floor_z = floor_z;
  scene.self_pairs = default_self_pairs(chain, links);
  return scene;
}

struct Tree {
  std::vector<JointConfig> nodes;
  std::vector<int> parents;
  std::vector<double> costs;
  std::vector<std::vector<int>> children;

  void init(const JointConfig& root) {
    nodes = {root};
    parents = {-1};
    costs = {0.0};
    children = {{}};
  }

  int size() const { return static_cast<int>(nodes.size()); }

  int add(const JointConfig& cfg, int parent, double cost) {
    const int idx = size();
    nodes.push_back(cfg);
    parents.push_back(parent);
    costs.push_back(cost);
    children.emplace_back();
    children[static_cast<std::size_t>(parent)].push_back(idx);
    return idx;
  }

  /// Re-parents `node` and propagates the cost change through its subtree.
  void reparent(int node, int new_parent, double new_cost) {
    auto& old_kids = children[static_cast<std::size_t>(parents[static_cast<std::size_t>(node)])];
    old_kids.erase(std::find(old_kids.begin(), old_kids.end(), node));
    parents[static_cast<std::size_t>(node)] = new_parent;
    children[static_cast<std::size_t>(new_parent)].push_back(node);
    costs[static_cast<std::size_t>(node)] = new_cost;
    std::vector<int> stack = {node};
    while (!stack.empty()) {
      const int cur = stack.back();
      stack.pop_back();
      for (int child : children[static_cast<std::size_t>(cur)]) {
        costs[static_cast<std::size_t>(child)] =
            costs[static_cast<std::size_t>(cur)] +
            wrapped_distance(nodes[static_cast<std::size_t>(cur)],
                             nodes[static_cast<std::size_t>(child)]);
        stack.push_back(child);
      }
    }
  }

  std::vector<JointConfig> path_to_root(int node) const {
    std::vector<JointConfig> path;
    for (int cur = node; cur >= 0; cur = parents[static_cast<std::size_t>(cur)]) {
      path.push_back(nodes[static_cast<std::size_t>(cur)]);
    }
    return path;  // node first, root last
  }
};

/// Goal-biased sampler: Gaussian around `center` with probability
/// `goal_bias`, otherwise uniform over [-pi, pi)^6. Outputs are wrapped.
inline JointConfig sample_config(const PlannerParams& params, const JointConfig& center,
                                 std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  JointConfig out;
  if (coin(rng) < params.goal_bias) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < kNumJoints; ++i) {
      out[i] = wrap_angle(center[i] + params.gauss_std * gauss(rng));
    }
  } else {
    std::uniform_real_distribution<double> uni(-std::numbers::pi, std::numbers::pi);
    for (int i = 0; i < kNumJoints; ++i) {
      out[i] = wrap_angle(uni(rng));
    }
  }
  return out;
}

/// Linear scan in the wrapped metric; ties break to the lowest index.
inline int nearest_node(const Tree& tree, const JointConfig& q) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < tree.size(); ++i) {
    const double d = wrapped_distance(tree.nodes[static_cast<std::size_t>(i)], q);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

enum class ExtendOutcome { kAdded, kPruned, kBlocked };

struct ExtendResult {
  ExtendOutcome outcome;
  int node_index = -1;
};

/// One growth attempt: prune the sample on risk, steer from the nearest
/// node, validate the edge, insert with the best nearby parent, rewire.
inline ExtendResult extend(Tree& tree, const JointConfig& q_rand, const PlanningScene& scene,
                           const PlannerParams& params, std::vector<Capsule>& scratch) {
  if (!scene.risk_ok(q_rand, scratch)) {
    return {ExtendOutcome::kPruned};
  }
  const int near = nearest_node(tree, q_rand);
  const JointConfig& q_near = tree.nodes[static_cast<std::size_t>(near)];
  if (wrapped_distance(q_near, q_rand) == 0.0) {
    return {ExtendOutcome::kBlocked};
  }
  const JointConfig q_new = angular_step(q_near, q_rand, params.step);
  if (!scene.edge_valid(q_near, q_new, params.edge_resolution, scratch)) {
    return {ExtendOutcome::kBlocked};
  }

  // Candidate parents within the rewire radius, cheapest arrival first.
  struct Candidate {
    int index;
    double edge;
    double arrival;
  };
  std::vector<Candidate> neighbors;
  for (int i = 0; i < tree.size(); ++i) {
    const double d = wrapped_distance(tree.nodes[static_cast<std::size_t>(i)], q_new);
    if (d <= params.rewire_radius) {
      neighbors.push_back({i, d, tree.costs[static_cast<std::size_t>(i)] + d});
    }
  }
  std::sort(neighbors.begin(), neighbors.end(), [](const Candidate& a, const Candidate& b) {
    return a.arrival != b.arrival ? a.arrival < b.arrival : a.index < b.index;
  });

  int parent = near;
  double cost = tree.costs[static_cast<std::size_t>(near)] + wrapped_distance(q_near, q_new);
  for (const Candidate& c : neighbors) {
    if (c.arrival >= cost) break;
    if (c.index == near) continue;
    if (scene.edge_valid(tree.nodes[static_cast<std::size_t>(c.index)], q_new,
                         params.edge_resolution, scratch)) {
      parent = c.index;
      cost = c.arrival;
      break;
    }
  }
  const int idx = tree.add(q_new, parent, cost);

  // Rewire neighbors through the new node when it lowers their cost.
  for (const Candidate& c : neighbors) {
    if (c.index == parent) continue;
    const double through_new = cost + c.edge;
    if (through_new + 1e-12 < tree.costs[static_cast<std::size_t>(c.index)] &&
        scene.edge_valid(q_new, tree.nodes[static_cast<std::size_t>(c.index)],
                         params.edge_resolution, scratch)) {
      tree.reparent(c.index, idx, through_new);
    }
  }
  return {ExtendOutcome::kAdded, idx};
}

/// Joins `grown` (at its node `new_index`) to `other` when the nearest node
/// of `other` is within the connect threshold and the bridge edge passes
/// the usual checks. Returned path runs root(grown) .. root(other).
inline std::optional<std::vector<JointConfig>> connect_trees(const Tree& grown, int new_index,
                                                             const Tree& other,
                                                             const PlanningScene& scene,
                                                             const PlannerParams& params,
                                                             std::vector<Capsule>& scratch) {
  const JointConfig& q_new = grown.nodes[static_cast<std::size_t>(new_index)];
  const int near = nearest_node(other, q_new);
  const JointConfig& q_other = other.nodes[static_cast<std::size_t>(near)];
  const double gap = wrapped_distance(q_new, q_other);
  if (gap > params.connect_threshold) {
    return std::nullopt;
  }
  if (gap > 0.0 && !scene.edge_valid(q_new, q_other, params.edge_resolution, scratch)) {
    return std::nullopt;
  }
  std::vector<JointConfig> path = grown.path_to_root(new_index);
  std::reverse(path.begin(), path.end());
  const std::vector<JointConfig> tail = other.path_to_root(near);
  path.insert(path.end(), tail.begin(), tail.end());
  return path;
}

inline double path_length(std::span<const JointConfig> path) {
  double len = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    len += wrapped_distance(path[i - 1], path[i]);
  }
  return len;
}

/// Randomized shortcutting. Replaces random sub-paths with direct edges
/// when the edge passes risk and collision checks; endpoints unchanged,
/// length never increases.
inline std::vector<JointConfig> shortcut_path(std::vector<JointConfig> path,
                                              const PlanningScene& scene,
                                              const PlannerParams& params,
                                              std::mt19937_64& rng,
                                              std::vector<Capsule>& scratch) {
  if (path.size() < 3) return path;
  for (int iter = 0; iter < params.shortcut_iters; ++iter) {
    if (path.size() < 3) break;
    std::uniform_int_distribution<std::size_t> pick(0, path.size() - 1);
    std::size_t i = pick(rng);
    std::size_t j = pick(rng);
    if (i > j) std::swap(i, j);
    if (j - i < 2) continue;
    double sub = 0.0;
    for (std::size_t k = i + 1; k <= j; ++k) sub += wrapped_distance(path[k - 1], path[k]);
    const double direct = wrapped_distance(path[i], path[j]);
    if (direct > sub) continue;
    if (!scene.edge_valid(path[i], path[j], params.edge_resolution, scratch)) continue;
    path.erase(path.begin() + static_cast<std::ptrdiff_t>(i) + 1,
               path.begin() + static_cast<std::ptrdiff_t>(j));
  }
  return path;
}

/// Re-interpolates so consecutive waypoints are at most `max_step` apart
/// (wrapped Euclidean); anchor waypoints are preserved exactly.
inline std::vector<JointConfig> densify_path(const std::vector<JointConfig>& path,
                                             double max_step) {
  if (path.empty()) return {};
  std::vector<JointConfig> out = {path.front()};
  for (std::size_t i = 1; i < path.size(); ++i) {
    const JointConfig& target = path[i];
    if (wrapped_distance(out.back(), target) == 0.0 && i + 1 < path.size()) continue;
    JointConfig cur = out.back();
    while (wrapped_distance(cur, target) > 0.0) {
      cur = angular_step(cur, target, max_step);
      out.push_back(cur);
    }
    if (wrapped_distance(out.back(), target) > 0.0) out.push_back(target);
  }
  if (out.size() == 1 && path.size() > 1) out.push_back(path.back());
  return out;
}

struct PlanResult {
  enum class Status { kSuccess, kTimeout, kInvalidStart, kInvalidGoal };
  Status status = Status::kTimeout;
  std::vector<JointConfig> path;  // wrapped; endpoints equal q_s / q_g exactly
  int nodes_explored = 0;
  int nodes_used = 0;
  double wall_time_s = 0.0;
};

inline const char* to_string(PlanResult::Status s) {
  switch (s) {
    case PlanResult::Status::kSuccess: return "success";
    case PlanResult::Status::kTimeout: return "timeout";
    case PlanResult::Status::kInvalidStart: return "invalid_start";
    case PlanResult::Status::kInvalidGoal: return "invalid_goal";
  }
  return "?";
}

/// Bidirectional risk-pruned RRT* over the wrapped joint metric. The
/// forecast inside `scene` stays frozen for the whole call, so identical
/// inputs and seed reproduce the result exactly whenever the wall-clock
/// cap does not bind.
inline PlanResult plan(const JointConfig& q_s_in, const JointConfig& q_g_in,
                       const PlanningScene& scene, const PlannerParams& params) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto elapsed = [&t0]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  PlanResult result;
  std::vector<Capsule> scratch;
  const JointConfig q_s = wrap(q_s_in);
  const JointConfig q_g = wrap(q_g_in);

  if (!scene.config_valid(q_s, scratch)) {
    result.status = PlanResult::Status::kInvalidStart;
    result.wall_time_s = elapsed();
    return result;
  }
  if (!scene.config_valid(q_g, scratch)) {
    result.status = PlanResult::Status::kInvalidGoal;
    result.wall_time_s = elapsed();
    return result;
  }

  std::mt19937_64 rng(params.seed);

  const auto finish = [&](std::vector<JointConfig> path, int explored) {
    path = shortcut_path(std::move(path), scene, params, rng, scratch);
    path = densify_path(path, params.step);
    result.status = PlanResult::Status::kSuccess;
    result.path = std::move(path);
    result.nodes_explored = explored;
    result.nodes_used = static_cast<int>(result.path.size());
    result.wall_time_s = elapsed();
    return result;
  };

  if (wrapped_distance(q_s, q_g) == 0.0) {
    result.status = PlanResult::Status::kSuccess;
    result.path = {q_s};
    result.nodes_used = 1;
    result.wall_time_s = elapsed();
    return result;
  }
  if (wrapped_distance(q_s, q_g) <= params.connect_threshold &&
      scene.edge_valid(q_s, q_g, params.edge_resolution, scratch)) {
    return finish({q_s, q_g}, 2);
  }

  Tree start_tree, goal_tree;
  start_tree.init(q_s);
  goal_tree.init(q_g);
  Tree* active = &start_tree;
  Tree* passive = &goal_tree;
  bool active_is_start = true;

  while (start_tree.size() + goal_tree.size() < params.max_nodes && elapsed() < params.t_max) {
    const JointConfig q_rand = sample_config(params, passive->nodes[0], rng);
    const ExtendResult ext = extend(*active, q_rand, scene, params, scratch);
    if (ext.outcome == ExtendOutcome::kAdded) {
      if (auto joined =
              connect_trees(*active, ext.node_index, *passive, scene, params, scratch)) {
        std::vector<JointConfig> path = std::move(*joined);
        if (!active_is_start) {
          std::reverse(path.begin(), path.end());
        }
        return finish(std::move(path), start_tree.size() + goal_tree.size());
      }
    }
    std::swap(active, passive);
    active_is_start = !active_is_start;
  }

  result.status = PlanResult::Status::kTimeout;
  result.nodes_explored = start_tree.size() + goal_tree.size();
  result.wall_time_s = elapsed();
  return result;
}

}  // namespace hap
