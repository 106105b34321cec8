// Command-line front end: validate configs, run scenario trials across
// seeds, emit per-tick traces (JSONL) and a trial summary (CSV), and print
// the aggregate table recomputed from the emitted CSV.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hap/config.hpp"
#include "hap/io.hpp"
#include "hap/sim.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitTrialFailure = 3;
constexpr int kExitIoError = 4;

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
  std::vector<std::uint64_t> seeds;
  std::string cur;
  for (char c : csv + ",") {
    if (c == ',') {
      if (!cur.empty()) seeds.push_back(std::stoull(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  return seeds;
}

int run_command(const std::string& config_path, const std::string& out_dir,
                const std::string& seeds_csv, int trials, const std::string& scenario_filter,
                std::optional<double> tau, std::optional<double> dth,
                std::optional<double> walk_speed, bool quiet) {
  hap::ConfigLoad load = hap::load_config(config_path);
  if (load.file_missing) {
    std::cerr << load.errors.front() << "\n";
    return kExitIoError;
  }
  if (!load.config) {
    for (const auto& e : load.errors) std::cerr << e << "\n";
    return kExitConfigError;
  }
  hap::AppConfig cfg = *load.config;

  // Command-line overrides win over file values.
  if (tau) cfg.apf.tau = *tau;
  if (dth) cfg.apf.d_th = *dth;
  if (walk_speed) {
    for (hap::Scenario& s : cfg.scenarios) s.human.walk_speed = *walk_speed;
  }
  if (!seeds_csv.empty()) {
    cfg.seeds = parse_seed_list(seeds_csv);
  } else if (trials > 0) {
    cfg.seeds.clear();
    for (std::uint64_t s = 1; s <= static_cast<std::uint64_t>(trials); ++s) {
      cfg.seeds.push_back(s);
    }
  }
  if (!scenario_filter.empty()) {
    std::vector<hap::Scenario> kept;
    for (const hap::Scenario& s : cfg.scenarios) {
      if (s.id == scenario_filter) kept.push_back(s);
    }
    cfg.scenarios = std::move(kept);
    if (cfg.scenarios.empty()) {
      std::cerr << "no scenario matches filter '" << scenario_filter << "'\n";
      return kExitConfigError;
    }
  }

  const std::vector<std::string> errs = hap::validate_config(cfg);
  if (!errs.empty()) {
    for (const auto& e : errs) std::cerr << "config error: " << e << "\n";
    return kExitConfigError;
  }

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    std::cerr << "cannot create output directory " << out_dir << ": " << ec.message() << "\n";
    return kExitIoError;
  }

  std::vector<hap::SummaryRow> rows;
  bool any_failed = false;
  int trial_index = 0;
  try {
    for (const hap::Scenario& scenario : cfg.scenarios) {
      hap::TrialRunner runner(scenario, cfg.chain, cfg.links, cfg.human_geo, cfg.apf,
                              cfg.planner, cfg.sim);
      for (std::uint64_t seed : cfg.seeds) {
        const hap::TrialResult result = runner.run(seed);
        const std::string trace_path = out_dir + "/trace_" + scenario.id + "_seed" +
                                       std::to_string(seed) + ".jsonl";
        hap::write_trace(trace_path, result.trace);
        rows.push_back(hap::summarize_trial(trial_index++, scenario.id, seed, result.metrics));
        if (!result.metrics.completed) any_failed = true;
        if (!quiet) {
          std::cout << scenario.id << " seed " << seed
                    << (result.metrics.completed ? "  done" : "  INCOMPLETE")
                    << "  min clearance " << result.metrics.min_clearance_mm << " mm, replans "
                    << result.metrics.replans << "\n";
        }
      }
    }
    hap::write_summary_csv(out_dir + "/summary.csv", rows);
  } catch (const std::exception& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIoError;
  }

  // Aggregates come from re-reading the file just written, so the printed
  // table always matches the CSV on disk.
  try {
    const std::vector<hap::SummaryRow> reread =
        hap::read_summary_csv(out_dir + "/summary.csv");
    const hap::Aggregates agg = hap::compute_aggregates(reread);
    if (!quiet) {
      std::cout << "\n" << hap::format_aggregate_table(agg);
    }
  } catch (const std::exception& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIoError;
  }

  return any_failed ? kExitTrialFailure : kExitOk;
}

int validate_command(const std::string& config_path) {
  hap::ConfigLoad load = hap::load_config(config_path);
  if (load.file_missing) {
    std::cerr << load.errors.front() << "\n";
    return kExitIoError;
  }
  if (!load.config) {
    for (const auto& e : load.errors) std::cerr << e << "\n";
    return kExitConfigError;
  }
  const std::vector<std::string> errs = hap::validate_config(*load.config);
  if (errs.empty()) {
    std::cout << "config OK: " << load.config->scenarios.size() << " scenario(s), "
              << load.config->seeds.size() << " seed(s)\n";
    return kExitOk;
  }
  for (const auto& e : errs) std::cout << "violation: " << e << "\n";
  return kExitConfigError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Predictive human-aware motion planning trials"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "hap_out";
  std::string seeds_csv;
  std::string scenario_filter;
  int trials = 0;
  double tau_value = 0.0, dth_value = 0.0, walk_speed_value = 0.0;
  bool quiet = false;

  CLI::App* run = app.add_subcommand("run", "run scenario trials and emit traces/summary");
  run->add_option("--config", config_path, "config JSON path")->required();
  run->add_option("--out", out_dir, "output directory (traces + summary.csv)");
  run->add_option("--seeds", seeds_csv, "comma-separated seed list (overrides config)");
  run->add_option("--trials", trials, "use seeds 1..N (overrides config seed list)");
  run->add_option("--scenario", scenario_filter, "run only the scenario with this id");
  auto* tau_opt = run->add_option("--tau", tau_value, "override APF threshold");
  auto* dth_opt = run->add_option("--dth", dth_value, "override influence radius (m)");
  auto* ws_opt = run->add_option("--walk-speed", walk_speed_value, "override walk speed (m/s)");
  run->add_flag("--quiet", quiet, "suppress per-trial lines and the aggregate table");

  CLI::App* validate = app.add_subcommand("validate", "check a config file, no side effects");
  validate->add_option("--config", config_path, "config JSON path")->required();

  CLI11_PARSE(app, argc, argv);

  if (app.got_subcommand(validate)) {
    return validate_command(config_path);
  }
  return run_command(config_path, out_dir, seeds_csv, trials, scenario_filter,
                     tau_opt->count() ? std::optional<double>(tau_value) : std::nullopt,
                     dth_opt->count() ? std::optional<double>(dth_value) : std::nullopt,
                     ws_opt->count() ? std::optional<double>(walk_speed_value) : std::nullopt,
                     quiet);
}
