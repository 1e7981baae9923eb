#pragma once

#include <vector>

#include "agents/agent.hpp"
#include "agents/losses.hpp"

namespace s2d::agents {

/// DQN with a hard-copied target network and linear epsilon decay.
class DqnAgent final : public Agent {
 public:
  DqnAgent(const AgentConfig& cfg, std::size_t obs_dim, std::size_t num_actions, std::uint64_t seed);

  Algorithm algorithm() const noexcept override { return Algorithm::Dqn; }
  std::unique_ptr<Agent> clone() const override { return std::make_unique<DqnAgent>(*this); }
  ActResult act(const Eigen::VectorXd& obs, ActMode mode) override;
  UpdateStats observe(const Transition& t) override;
  void begin_episode(double progress) override;
  AgentSnapshot snapshot() const override;
  const ReplayBuffer& buffer() const noexcept override { return buffer_; }
  double exploration_stat() const noexcept override { return epsilon_; }

  /// One Adam step on the smooth-L1 TD loss; returns the pre-step loss. Syncs the
  /// target network every `target_update_every` updates.
  double update(const Batch& batch);

  double epsilon() const noexcept { return epsilon_; }
  void set_epsilon(double e) noexcept { epsilon_ = e; }
  const nn::Network& online() const noexcept { return online_; }
  const nn::Network& target() const noexcept { return target_; }
  void set_networks(nn::Network online, nn::Network target);

 private:
  AgentConfig cfg_;
  std::size_t num_actions_;
  nn::Network online_;
  nn::Network target_;
  nn::AdamState opt_;
  std::mt19937_64 rng_;
  ReplayBuffer buffer_;
  double epsilon_;
};

struct PpoUpdateResult {
  double policy_loss = 0.0;  // clipped surrogate, mean over minibatch steps
  double value_loss = 0.0;
  double entropy = 0.0;
  std::size_t steps = 0;
};

/// Fills advantages (GAE, normalized over the rollout) and value targets. The rollout
/// must consist of whole episodes with `value` filled by act().
void compute_gae(std::vector<Transition>& rollout, double gamma, double lambda);

/// PPO with separate policy and value networks, updated every few episodes.
class PpoAgent final : public Agent {
 public:
  PpoAgent(const AgentConfig& cfg, std::size_t obs_dim, std::size_t num_actions, std::uint64_t seed);

  Algorithm algorithm() const noexcept override { return Algorithm::Ppo; }
  std::unique_ptr<Agent> clone() const override { return std::make_unique<PpoAgent>(*this); }
  ActResult act(const Eigen::VectorXd& obs, ActMode mode) override;
  UpdateStats observe(const Transition& t) override;
  AgentSnapshot snapshot() const override;
  const ReplayBuffer& buffer() const noexcept override { return buffer_; }
  double exploration_stat() const noexcept override { return last_entropy_; }

  /// GAE, then `epochs` passes of shuffled minibatches. Processed transitions are
  /// appended to the replay buffer for deterministic landscape sampling.
  PpoUpdateResult update(std::vector<Transition> rollout);

  const nn::Network& policy() const noexcept { return policy_; }
  const nn::Network& value() const noexcept { return value_; }

 private:
  AgentConfig cfg_;
  std::size_t num_actions_;
  nn::Network policy_;
  nn::Network value_;
  nn::AdamState policy_opt_;
  nn::AdamState value_opt_;
  std::mt19937_64 rng_;
  ReplayBuffer buffer_;
  std::vector<Transition> rollout_;
  std::size_t rollout_episodes_ = 0;
  double last_entropy_ = 0.0;
};

struct SacUpdateResult {
  double q1_loss = 0.0;
  double q2_loss = 0.0;
  double value_loss = 0.0;
  double policy_loss = 0.0;
};

/// SAC with a state-value network and soft-updated target value network, fixed entropy coefficient.
class SacAgent final : public Agent {
 public:
  SacAgent(const AgentConfig& cfg, std::size_t obs_dim, std::size_t action_dim, std::uint64_t seed);

  Algorithm algorithm() const noexcept override { return Algorithm::Sac; }
  std::unique_ptr<Agent> clone() const override { return std::make_unique<SacAgent>(*this); }
  ActResult act(const Eigen::VectorXd& obs, ActMode mode) override;
  Eigen::VectorXd env_action(const ActResult& a) const override { return cfg_.action_scale * a.action; }
  UpdateStats observe(const Transition& t) override;
  AgentSnapshot snapshot() const override;
  const ReplayBuffer& buffer() const noexcept override { return buffer_; }
  double exploration_stat() const noexcept override { return last_entropy_; }

  SacUpdateResult update(const Batch& batch);

  const nn::Network& policy() const noexcept { return policy_; }

 private:
  AgentConfig cfg_;
  std::size_t action_dim_;
  nn::Network policy_, q1_, q2_, value_, target_value_;
  nn::AdamState policy_opt_, q1_opt_, q2_opt_, value_opt_;
  std::mt19937_64 rng_;
  ReplayBuffer buffer_;
  double last_entropy_ = 0.0;
};

/// Uniform sample (with replacement) of `n` transitions.
Batch sample_uniform(const ReplayBuffer& buffer, std::size_t n, std::mt19937_64& rng);

}  // namespace s2d::agents
