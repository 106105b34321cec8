#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hap/perception.hpp"
#include "hap/sim.hpp"

namespace hap {

/// Recorded-pose file contents: timestamped 15-joint frames.
struct PoseSequence {
  std::vector<double> timestamps;
  std::vector<Skeleton> frames;
};

/// One JSON object per line: {"t": seconds, "joints": [[x,y,z,valid] x 15]}.
inline void write_pose_file(const std::string& path, const PoseSequence& seq) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open pose file for writing: " + path);
  for (std::size_t f = 0; f < seq.frames.size(); ++f) {
    nlohmann::json rec;
    rec["t"] = seq.timestamps[f];
    nlohmann::json joints = nlohmann::json::array();
    for (std::size_t j = 0; j < kJointCount; ++j) {
      const Vec3& p = seq.frames[f].joints[j];
      joints.push_back({p.x(), p.y(), p.z(), seq.frames[f].valid[j] ? 1 : 0});
    }
    rec["joints"] = std::move(joints);
    out << rec.dump() << "\n";
  }
}

inline PoseSequence read_pose_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open pose file: " + path);
  PoseSequence seq;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json rec = nlohmann::json::parse(line);
    const auto& joints = rec.at("joints");
    if (!joints.is_array() || joints.size() != kJointCount) {
      throw std::runtime_error("pose file line " + std::to_string(line_no) +
                               ": expected 15 joints");
    }
    Skeleton s;
    for (std::size_t j = 0; j < kJointCount; ++j) {
      const auto& row = joints[j];
      s.joints[j] = Vec3{row[0].get<double>(), row[1].get<double>(), row[2].get<double>()};
      s.valid[j] = row[3].get<double>() != 0.0;
    }
    if (!seq.timestamps.empty() && rec.at("t").get<double>() <= seq.timestamps.back()) {
      throw std::runtime_error("pose file line " + std::to_string(line_no) +
                               ": timestamps must strictly increase");
    }
    seq.timestamps.push_back(rec.at("t").get<double>());
    seq.frames.push_back(s);
  }
  return seq;
}

inline void write_trace(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open trace file for writing: " + path);
  for (const std::string& l : lines) out << l << "\n";
}

/// One summary row per trial.
struct SummaryRow {
  int trial = 0;
  std::string scenario;
  std::uint64_t seed = 0;
  bool completed = false;
  double min_clearance_mm = 0.0;
  int replans = 0;
  bool coverage = false;
  bool intrusion = false;
  double hold_time_s = 0.0;
  double sim_time_s = 0.0;
  std::vector<double> plan_times_s;     // trigger-driven attempts
  std::vector<int> nodes_explored;      // successful trigger-driven plans
  std::vector<int> nodes_used;
  int replan_attempts = 0;
  int replans_within_tmax = 0;
};

inline SummaryRow summarize_trial(int trial, const std::string& scenario, std::uint64_t seed,
                                  const TrialMetrics& m) {
  SummaryRow row;
  row.trial = trial;
  row.scenario = scenario;
  row.seed = seed;
  row.completed = m.completed;
  row.min_clearance_mm = m.min_clearance_mm;
  row.replans = m.replans;
  row.coverage = m.coverage;
  row.intrusion = m.intrusion;
  row.hold_time_s = m.hold_time_s;
  row.sim_time_s = m.sim_time_s;
  for (const ReplanEvent& ev : m.events) {
    if (!ev.trigger_driven) continue;
    ++row.replan_attempts;
    row.plan_times_s.push_back(ev.wall_s);
    if (ev.status == PlanResult::Status::kSuccess) {
      ++row.replans_within_tmax;
      row.nodes_explored.push_back(ev.nodes_explored);
      row.nodes_used.push_back(ev.nodes_used);
    }
  }
  return row;
}

namespace detail {

template <typename T>
std::string join_list(const std::vector<T>& v) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ';';
    os << v[i];
  }
  return os.str();
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

inline const char* kSummaryHeader =
    "trial,scenario,seed,completed,min_clearance_mm,replans,coverage,intrusion,"
    "hold_time_s,sim_time_s,replan_attempts,replans_within_tmax,plan_times_s,"
    "nodes_explored,nodes_used";

inline void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open summary file for writing: " + path);
  out << kSummaryHeader << "\n";
  out << std::setprecision(17);
  for (const SummaryRow& r : rows) {
    out << r.trial << ',' << r.scenario << ',' << r.seed << ',' << (r.completed ? 1 : 0) << ','
        << r.min_clearance_mm << ',' << r.replans << ',' << (r.coverage ? 1 : 0) << ','
        << (r.intrusion ? 1 : 0) << ',' << r.hold_time_s << ',' << r.sim_time_s << ','
        << r.replan_attempts << ',' << r.replans_within_tmax << ','
        << detail::join_list(r.plan_times_s) << ',' << detail::join_list(r.nodes_explored) << ','
        << detail::join_list(r.nodes_used) << "\n";
  }
}

inline std::vector<SummaryRow> read_summary_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open summary file: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kSummaryHeader) {
    throw std::runtime_error("summary file header mismatch: " + path);
  }
  std::vector<SummaryRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split(line, ',');
    if (f.size() != 15) throw std::runtime_error("summary row has wrong field count");
    SummaryRow r;
    r.trial = std::stoi(f[0]);
    r.scenario = f[1];
    r.seed = std::stoull(f[2]);
    r.completed = f[3] == "1";
    r.min_clearance_mm = std::stod(f[4]);
    r.replans = std::stoi(f[5]);
    r.coverage = f[6] == "1";
    r.intrusion = f[7] == "1";
    r.hold_time_s = std::stod(f[8]);
    r.sim_time_s = std::stod(f[9]);
    r.replan_attempts = std::stoi(f[10]);
    r.replans_within_tmax = std::stoi(f[11]);
    if (!f[12].empty()) {
      for (const std::string& v : detail::split(f[12], ';')) r.plan_times_s.push_back(std::stod(v));
    }
    if (!f[13].empty()) {
      for (const std::string& v : detail::split(f[13], ';')) r.nodes_explored.push_back(std::stoi(v));
    }
    if (!f[14].empty()) {
      for (const std::string& v : detail::split(f[14], ';')) r.nodes_used.push_back(std::stoi(v));
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

/// Sweep-level aggregates, all derivable from the summary CSV alone.
struct Aggregates {
  int trials = 0;
  int completed = 0;
  int intrusion_trials = 0;
  int covered_trials = 0;
  double min_clearance_mm = std::numeric_limits<double>::infinity();
  double mean_min_clearance_mm = 0.0;
  double plan_time_median_s = 0.0;
  double plan_time_p95_s = 0.0;
  double plan_time_max_s = 0.0;
  double nodes_explored_mean = 0.0;
  double nodes_used_mean = 0.0;
  double hold_time_mean_s = 0.0;
  int replan_attempts = 0;
  int replans_within_tmax = 0;

  double completion_pct() const {
    return trials ? 100.0 * completed / trials : 0.0;
  }
  double coverage_pct() const {
    return intrusion_trials ? 100.0 * covered_trials / intrusion_trials : 100.0;
  }
};

inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

inline Aggregates compute_aggregates(const std::vector<SummaryRow>& rows) {
  Aggregates a;
  a.trials = static_cast<int>(rows.size());
  std::vector<double> plan_times;
  double explored_sum = 0.0, used_sum = 0.0;
  int plan_count = 0;
  for (const SummaryRow& r : rows) {
    a.completed += r.completed ? 1 : 0;
    a.intrusion_trials += r.intrusion ? 1 : 0;
    a.covered_trials += (r.intrusion && r.coverage) ? 1 : 0;
    a.min_clearance_mm = std::min(a.min_clearance_mm, r.min_clearance_mm);
    a.mean_min_clearance_mm += r.min_clearance_mm;
    a.hold_time_mean_s += r.hold_time_s;
    a.replan_attempts += r.replan_attempts;
    a.replans_within_tmax += r.replans_within_tmax;
    plan_times.insert(plan_times.end(), r.plan_times_s.begin(), r.plan_times_s.end());
    for (int n : r.nodes_explored) explored_sum += n;
    for (int n : r.nodes_used) used_sum += n;
    plan_count += static_cast<int>(r.nodes_explored.size());
  }
  if (a.trials > 0) {
    a.mean_min_clearance_mm /= a.trials;
    a.hold_time_mean_s /= a.trials;
  }
  if (!plan_times.empty()) {
    std::sort(plan_times.begin(), plan_times.end());
    a.plan_time_median_s = quantile_sorted(plan_times, 0.5);
    a.plan_time_p95_s = quantile_sorted(plan_times, 0.95);
    a.plan_time_max_s = plan_times.back();
  }
  if (plan_count > 0) {
    a.nodes_explored_mean = explored_sum / plan_count;
    a.nodes_used_mean = used_sum / plan_count;
  }
  return a;
}

inline std::string format_aggregate_table(const Aggregates& a) {
  std::ostringstream os;
  os << std::fixed;
  auto row = [&os](const std::string& metric, const std::string& value,
                   const std::string& notes) {
    os << "  " << std::left << std::setw(28) << metric << std::setw(22) << value << notes
       << "\n";
  };
  os << "Sweep summary (" << a.trials << " trials)\n";
  {
    std::ostringstream v;
    v << std::fixed << std::setprecision(1) << a.completion_pct() << " %";
    row("Task completion", v.str(), std::to_string(a.completed) + "/" +
                                         std::to_string(a.trials) + " trials");
  }
  {
    std::ostringstream v;
    v << std::fixed << std::setprecision(1) << a.coverage_pct() << " %";
    row("Replans triggered", v.str(),
        std::to_string(a.covered_trials) + "/" + std::to_string(a.intrusion_trials) +
            " intrusion trials covered");
  }
  {
    std::ostringstream v;
    v << std::fixed << std::setprecision(1) << a.min_clearance_mm;
    row("Minimum clearance (mm)", v.str(), "worst over all trials");
  }
  {
    std::ostringstream v;
    v << std::fixed << std::setprecision(1) << a.mean_min_clearance_mm;
    row("Mean min clearance (mm)", v.str(), "mean of per-trial minima");
  }
  {
    std::ostringstream v;
    v << std::fixed << std::setprecision(3) << a.plan_time_median_s << " / "
      << a.plan_time_p95_s << " / " << a.plan_time_max_s;
    row("Plan time med/p95/max (s)", v.str(),
        std::to_string(a.replans_within_tmax) + "/" + std::to_string(a.replan_attempts) +
            " replans within cap");
  }
  {
    std::ostringstream v;
    v << std::fixed << std::setprecision(1) << a.nodes_explored_mean;
    row("Nodes explored (mean)", v.str(), "per successful replan");
  }
  {
    std::ostringstream v;
    v << std::fixed << std::setprecision(1) << a.nodes_used_mean;
    row("Nodes used (mean)", v.str(), "final path waypoints");
  }
  {
    std::ostringstream v;
    v << std::fixed << std::setprecision(2) << a.hold_time_mean_s;
    row("Hold time (mean s)", v.str(), "per trial");
  }
  return os.str();
}

}  // namespace hap
