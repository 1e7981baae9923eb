#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "agents/agent.hpp"
#include "envs/env.hpp"
#include "reward/curriculum.hpp"

namespace s2d::agents {

struct Budget {
  reward::TimeUnit unit = reward::TimeUnit::Episodes;
  std::uint64_t total = 1000;
};

struct EpisodeRecord {
  std::uint64_t episode = 0;
  std::uint64_t env_step = 0;  // cumulative env steps at the end of the episode
  int stage = 1;               // curriculum stage at the episode's first step
  double ret = 0.0;            // undiscounted base-reward return
  bool success = false;
  std::uint64_t length = 0;
  std::uint64_t updates = 0;   // optimizer steps taken during the episode
  double loss_main = 0.0;      // mean over those steps, 0 when there were none
  double exploration = 0.0;    // epsilon (DQN) or entropy (PPO, SAC) at episode end
};

/// Drives one agent through one environment under a reward curriculum, one env step at a time.
/// Curriculum time is the episode index or the global env-step count, per the curriculum's unit.
/// Copying a Trainer deep-copies the agent (networks, optimizer, RNG, buffer) and the env state.
class Trainer {
 public:
  Trainer(env::Environment env, std::unique_ptr<Agent> agent, reward::CurriculumSpec curriculum, Budget budget,
          std::uint64_t env_seed);
  Trainer(const Trainer& other);
  Trainer& operator=(const Trainer& other);
  Trainer(Trainer&&) noexcept = default;
  Trainer& operator=(Trainer&&) noexcept = default;

  /// One environment step; returns the finished episode's record when the step ends it.
  std::optional<EpisodeRecord> step();
  /// Steps until the budget is spent. The callback sees every completed episode.
  void run(const std::function<void(const EpisodeRecord&)>& on_episode = {});
  bool finished() const noexcept;

  std::uint64_t time() const noexcept;
  std::uint64_t episodes_done() const noexcept { return episodes_; }
  std::uint64_t env_steps() const noexcept { return env_steps_; }
  bool in_episode() const noexcept { return in_episode_; }

  void set_curriculum(reward::CurriculumSpec c);
  const reward::CurriculumSpec& curriculum() const noexcept { return curriculum_; }
  const Budget& budget() const noexcept { return budget_; }
  const Agent& agent() const noexcept { return *agent_; }
  Agent& agent() noexcept { return *agent_; }
  const env::Environment& environment() const noexcept { return env_; }

 private:
  void begin_episode();

  env::Environment env_;
  std::unique_ptr<Agent> agent_;
  reward::CurriculumSpec curriculum_;
  Budget budget_;
  std::uint64_t env_seed_;
  double diam_;

  std::uint64_t episodes_ = 0;
  std::uint64_t env_steps_ = 0;
  bool in_episode_ = false;
  Eigen::VectorXd obs_;
  EpisodeRecord current_;
  double loss_sum_ = 0.0;
};

}  // namespace s2d::agents
