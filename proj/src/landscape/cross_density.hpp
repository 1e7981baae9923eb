#pragma once

#include <functional>
#include <string>
#include <vector>

#include "agents/trainer.hpp"
#include "envs/env.hpp"
#include "landscape/landscape.hpp"
#include "reward/curriculum.hpp"

namespace s2d::landscape {

struct CrossDensitySpec {
  env::EnvSpec env = env::GridworldSpec::fixed_goal_4x4();
  agents::Algorithm algorithm = agents::Algorithm::Dqn;
  agents::AgentConfig agent;
  reward::Density initial = reward::Density::Sparse;
  std::uint64_t transition = 200;  // in curriculum units
  reward::TimeUnit unit = reward::TimeUnit::Episodes;
  double gamma = 0.99;             // shaping discount
  agents::Budget budget;
  std::vector<std::uint64_t> checkpoints{50, 400, 800};  // gradient updates after the clone
  bool run_to_budget = false;
  GridSpec grid;
  std::size_t batch_size = 128;
  unsigned threads = 1;
  std::string run_id = "run";
};

void validate(const CrossDensitySpec& spec);

struct BranchResult {
  reward::Schedule schedule = reward::Schedule::OnlySparse;
  std::vector<LandscapeGrid> grids;
  DepthReport depth;
  std::vector<agents::EpisodeRecord> episodes;
};

struct CrossDensityResult {
  std::uint64_t seed = 0;
  std::vector<agents::EpisodeRecord> pre_transition;
  BranchResult keep;    // stays on the initial density (OnlySparse or OnlyDense)
  BranchResult change;  // switches at the transition (S2D or D2S)
};

/// The schedules of the two branches for an initial density: {kept, switched}.
std::pair<reward::Schedule, reward::Schedule> branch_schedules(reward::Density initial);

/// Trains under the initial density until the transition, clones agent, buffer, optimizer and env,
/// and continues both branches with identical per-episode reset seeds. At each checkpoint every
/// branch emits one grid over its probed network and the deterministic batch of its own buffer.
/// Direction draws and evaluation seeds are shared by the branches, so clone-instant grids coincide.
CrossDensityResult cross_density_run(const CrossDensitySpec& spec, std::uint64_t seed);

}  // namespace s2d::landscape
