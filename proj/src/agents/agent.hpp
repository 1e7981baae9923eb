#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>

#include "agents/replay_buffer.hpp"
#include "json.hpp"
#include "nn/adam.hpp"
#include "nn/network.hpp"

namespace s2d::agents {

enum class Algorithm { Dqn, Ppo, Sac };
enum class ActMode { Explore, Greedy };

std::string to_string(Algorithm a);
std::optional<Algorithm> parse_algorithm(const std::string& s);

struct AgentConfig {
  double lr = 5e-4;
  double gamma = 0.99;
  std::size_t batch_size = 128;
  double entropy_coef = 0.03;
  std::size_t hidden = 64;
  std::size_t buffer_capacity = 10000;
  // DQN
  double eps_start = 1.0;
  double eps_end = 0.05;
  double eps_decay_fraction = 0.5;
  std::size_t target_update_every = 100;
  // PPO
  double clip = 0.2;
  double gae_lambda = 0.95;
  std::size_t epochs = 4;
  std::size_t minibatch = 128;
  std::size_t episodes_per_update = 2;
  double value_coef = 5e-4;
  // SAC
  double sac_alpha = 0.2;
  double tau = 0.005;
  double action_scale = 0.1;
};

void validate(const AgentConfig& cfg);
nlohmann::json to_json(const AgentConfig& cfg);
/// Reads known keys over defaults; unknown keys are reported through `unknown`.
AgentConfig agent_config_from_json(const nlohmann::json& j, std::vector<std::string>* unknown = nullptr);

/// Frozen copy of every network an agent owns, plus what is needed to evaluate its losses.
struct AgentSnapshot {
  Algorithm algorithm = Algorithm::Dqn;
  std::map<std::string, nn::Network> networks;
  AgentConfig config;
  std::size_t action_size = 0;  // discrete action count or continuous action dimension
  std::uint64_t train_steps = 0;
  std::uint64_t update_count = 0;

  const nn::Network& net(const std::string& name) const;
};

/// Name of the network whose parameters span the loss landscape and enter the sharpness metric.
const std::string& probed_network(Algorithm a);

nlohmann::json to_json(const AgentSnapshot& snap);
AgentSnapshot snapshot_from_json(const nlohmann::json& doc);
void save_snapshot(const AgentSnapshot& snap, const std::string& path);
AgentSnapshot load_snapshot(const std::string& path);

struct ActResult {
  Eigen::VectorXd action;  // stored in the replay buffer
  double log_prob = 0.0;
  double value = 0.0;
};

struct UpdateStats {
  std::size_t updates = 0;  // optimizer steps performed by this call
  double loss_main = 0.0;   // mean main loss over those steps
  double aux = 0.0;         // policy entropy (PPO, SAC) when updates > 0
};

/// Common driver surface of the DQN, PPO and SAC agents. Agents own their
/// networks, optimizer state, RNG and replay buffer; clone() deep-copies all of it.
class Agent {
 public:
  virtual ~Agent() = default;

  virtual Algorithm algorithm() const noexcept = 0;
  virtual std::unique_ptr<Agent> clone() const = 0;

  virtual ActResult act(const Eigen::VectorXd& obs, ActMode mode) = 0;
  /// Maps a stored action to what the environment consumes.
  virtual Eigen::VectorXd env_action(const ActResult& a) const { return a.action; }
  /// Records one transition and performs whatever updates the agent's cadence calls for.
  virtual UpdateStats observe(const Transition& t) = 0;
  /// Called before every episode; `progress` is the fraction of the training budget used.
  virtual void begin_episode(double progress) { (void)progress; }

  virtual AgentSnapshot snapshot() const = 0;
  virtual const ReplayBuffer& buffer() const noexcept = 0;
  virtual double exploration_stat() const noexcept = 0;  // epsilon (DQN) or last entropy

  std::uint64_t update_count() const noexcept { return update_count_; }
  std::uint64_t train_steps() const noexcept { return train_steps_; }

 protected:
  std::uint64_t update_count_ = 0;
  std::uint64_t train_steps_ = 0;
};

std::unique_ptr<Agent> make_agent(Algorithm algorithm, const AgentConfig& cfg, std::size_t obs_dim,
                                  std::size_t action_size, std::uint64_t seed);

}  // namespace s2d::agents
