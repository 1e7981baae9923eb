#pragma once

#include <cstdint>
#include <memory>

#include "agents/agent.hpp"
#include "agents/losses.hpp"

namespace s2d::agents {

/// Landscape objective of a frozen agent on a fixed batch, as a function of its probed network:
/// smooth-L1 TD loss against the frozen target (DQN), clipped surrogate against the batch's stored
/// log-probs (PPO), or mean(alpha log pi - min(Q1, Q2)) with action noise drawn from `eval_seed` (SAC).
/// Every other network is held at its snapshot value. Calls are pure and thread-safe.
class PolicyLossEvaluator {
 public:
  PolicyLossEvaluator(AgentSnapshot snapshot, Batch batch, std::uint64_t eval_seed);

  double operator()(const nn::Network& probe) const;
  nn::LossAndGrad with_grad(const nn::Network& probe) const;

  const nn::Network& base() const;
  const AgentSnapshot& snapshot() const noexcept { return *snap_; }
  const Batch& batch() const noexcept { return *batch_; }
  std::uint64_t eval_seed() const noexcept { return eval_seed_; }

 private:
  void check_probe(const nn::Network& probe) const;

  std::shared_ptr<const AgentSnapshot> snap_;
  std::shared_ptr<const Batch> batch_;
  std::uint64_t eval_seed_;
  Vector dqn_targets_;
  Matrix sac_noise_;
};

double policy_loss_eval(const AgentSnapshot& snapshot, const Batch& batch, std::uint64_t eval_seed);

}  // namespace s2d::agents
