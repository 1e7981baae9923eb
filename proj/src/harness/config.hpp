#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "agents/agent.hpp"
#include "common/error.hpp"
#include "agents/trainer.hpp"
#include "envs/env.hpp"
#include "json.hpp"
#include "landscape/landscape.hpp"
#include "reward/curriculum.hpp"
#include "sharpness/sharpness.hpp"

namespace s2d::harness {

inline constexpr int kConfigVersion = 1;

struct CrossDensityOptions {
  bool enabled = false;
  reward::Density initial = reward::Density::Sparse;
  std::vector<std::uint64_t> checkpoints{50, 400, 800};
  landscape::GridSpec grid;
  std::size_t batch_size = 128;
  bool run_to_budget = false;
};

struct SharpnessOptions {
  bool enabled = true;
  sharpness::SharpnessConfig cfg;
};

/// One experiment: a single schedule over several seeds. See README for the file format.
struct ExperimentConfig {
  std::string run_id = "run";
  env::EnvSpec env = env::GridworldSpec::fixed_goal_4x4();
  agents::Algorithm algorithm = agents::Algorithm::Dqn;
  agents::AgentConfig agent;
  reward::Schedule schedule = reward::Schedule::S2D;
  std::vector<std::uint64_t> transitions;  // explicit counts, or empty when a preset is used
  std::string transition_preset;           // "C1", "C2" or "C3"
  std::optional<std::uint64_t> preset_n;   // N of the presets; default derived from the budget
  reward::TimeUnit unit = reward::TimeUnit::Episodes;
  agents::Budget budget;
  double gamma = 0.99;  // shaping discount
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  CrossDensityOptions cross_density;
  SharpnessOptions sharpness;
  std::string output_dir = "runs";
  unsigned threads = 0;       // seed workers; 0 = hardware concurrency
  unsigned grid_threads = 1;  // workers per landscape grid
  bool save_snapshots = true;
};

struct ConfigIssue {
  std::string path;
  std::string message;
};

/// Validation failure listing every offending field path.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues);
  const std::vector<ConfigIssue>& issues() const noexcept { return issues_; }

 private:
  std::vector<ConfigIssue> issues_;
};

/// Parses and validates; warnings (ignored keys, ignored transitions) are appended to `warnings`.
ExperimentConfig config_from_json(const nlohmann::json& doc, std::vector<std::string>* warnings = nullptr);
ExperimentConfig load_config(const std::string& path, std::vector<std::string>* warnings = nullptr);
/// Re-validates an already built config (for programmatic edits).
void validate(const ExperimentConfig& cfg, std::vector<std::string>* warnings = nullptr);

nlohmann::json to_json(const ExperimentConfig& cfg);
nlohmann::json env_to_json(const env::EnvSpec& spec);
env::EnvSpec env_from_json(const nlohmann::json& j);

/// Preset N: budget / 10 for episode budgets and budget / 40 for env-step budgets unless overridden.
std::uint64_t preset_unit(const ExperimentConfig& cfg);
/// Transition times actually used: explicit, preset k * N, or none for single-density schedules.
std::vector<std::uint64_t> resolved_transitions(const ExperimentConfig& cfg);
reward::CurriculumSpec curriculum_of(const ExperimentConfig& cfg);

/// FNV-1a over the canonical JSON of every field that affects results (output paths and worker
/// counts excluded).
std::uint64_t config_hash(const ExperimentConfig& cfg);

}  // namespace s2d::harness
