#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "landscape/landscape.hpp"

namespace s2d::harness {

struct SeedSummary {
  std::uint64_t seed = 0;
  double final_return = 0.0;   // mean base return over the last 10% of episodes
  double final_success = 0.0;  // success rate over the same window
  std::optional<double> sharpness;
};

struct RunSummary {
  std::string run_id;
  std::string env_key;   // canonical env JSON; runs must agree to be compared
  std::string schedule;  // group label, e.g. "S2D@200" or "OnlySparse"
  std::vector<SeedSummary> seeds;
  std::map<std::string, std::vector<landscape::DepthReport>> depth;  // branch label -> one report per seed
};

/// Final-window statistics of one metrics.csv (episodes in file order).
SeedSummary summarize_metrics(const std::string& metrics_csv_text, double final_fraction = 0.1);

/// Reads manifest.json, per-seed metrics.csv, sharpness.csv and depth_*.json from a run directory.
RunSummary load_run_summary(const std::string& run_dir);

struct Stat {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::size_t n = 0;
};
Stat mean_std(const std::vector<double>& v);

struct Report {
  nlohmann::json json;
  std::string text;
};

/// Per-schedule mean and std of final return, success rate and sharpness, plus the depth-by-phase
/// table with successive deltas for every branch that has depth reports.
Report compare_report(const std::vector<RunSummary>& runs);

}  // namespace s2d::harness
