#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace s2d::agents {

struct Transition {
  Eigen::VectorXd state;
  Eigen::VectorXd action;  // discrete: one element holding the index; continuous: agent-space action
  double reward = 0.0;
  Eigen::VectorXd next_state;
  bool done = false;
  std::uint64_t episode = 0;
  // Filled for on-policy rollouts (PPO); zero otherwise.
  double log_prob = 0.0;
  double value = 0.0;
  double advantage = 0.0;
  double value_target = 0.0;
};

/// Column-per-sample view of a list of transitions.
struct Batch {
  Eigen::MatrixXd states;
  Eigen::MatrixXd actions;
  Eigen::VectorXd rewards;
  Eigen::MatrixXd next_states;
  Eigen::VectorXd dones;  // 1.0 when done
  Eigen::VectorXd log_probs;
  Eigen::VectorXd advantages;
  Eigen::VectorXd value_targets;
  std::vector<std::uint64_t> episodes;

  std::size_t size() const noexcept { return static_cast<std::size_t>(states.cols()); }
  std::uint64_t fingerprint() const;
};

Batch make_batch(std::span<const Transition> items);

nlohmann::json to_json(const Batch& batch);
Batch batch_from_json(const nlohmann::json& doc);

/// Bounded FIFO; the oldest transition is evicted first.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 10000);

  void push(Transition t);
  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }
  std::size_t capacity() const noexcept { return capacity_; }
  const Transition& operator[](std::size_t i) const { return items_[i]; }
  const std::deque<Transition>& items() const noexcept { return items_; }

  /// The most recent min(size, len) transitions in chronological order.
  std::vector<Transition> deterministic_sample(std::size_t size) const;
  Batch deterministic_batch(std::size_t size) const;

 private:
  std::size_t capacity_;
  std::deque<Transition> items_;
};

}  // namespace s2d::agents
