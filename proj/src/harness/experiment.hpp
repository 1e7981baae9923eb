#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "agents/trainer.hpp"
#include "common/error.hpp"
#include "harness/config.hpp"
#include "json.hpp"

namespace s2d::harness {

inline constexpr const char* kCodeVersion = "0.1.0";

struct SeedStatus {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error_code;  // empty when ok
  std::string error;
  std::map<std::string, std::string> artifacts;  // path relative to the run directory -> FNV-1a hex
};

struct ExperimentResult {
  std::string run_dir;
  nlohmann::json manifest;
  std::vector<SeedStatus> seeds;

  bool all_ok() const;
  /// Most severe per-seed failure as an ErrorCode, if any seed failed.
  std::optional<ErrorCode> worst_error() const;
};

using LogFn = std::function<void(const std::string&)>;

/// Trains every seed (in parallel, each in its own directory under output_dir/run_id), writes
/// metrics.csv, the final snapshot and evaluation batch, sharpness, optional cross-density grids and
/// depth reports, and a manifest. A failing seed is recorded and does not stop its siblings.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const LogFn& log = {});

/// Cross-density only (no standalone training run); artifacts go to the same layout.
ExperimentResult run_cross_density(const ExperimentConfig& cfg, const LogFn& log = {});

std::string metrics_header();
std::string metrics_row(const std::string& run_id, std::uint64_t seed, const agents::EpisodeRecord& r);

std::string file_hash(const std::string& path);
std::string format_double(double v);

}  // namespace s2d::harness
