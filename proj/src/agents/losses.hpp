#pragma once

#include "agents/replay_buffer.hpp"
#include "nn/network.hpp"

// Loss functions of the three agents as pure functions of (networks, batch).
// Every *_and_grad variant returns the gradient with respect to the first
// network argument only; the remaining networks are treated as constants.
namespace s2d::agents {

using nn::Matrix;
using nn::Network;
using nn::Vector;

// ----- DQN ------------------------------------------------------------------

/// r + gamma * (1 - done) * max_a' Q_target(s', a')
Vector dqn_targets(const Network& target, const Batch& batch, double gamma);
/// Smooth-L1 (Huber, delta 1) TD loss, mean over the batch.
double dqn_td_loss(const Network& online, const Batch& batch, const Vector& targets);
nn::LossAndGrad dqn_td_loss_and_grad(const Network& online, const Batch& batch, const Vector& targets);

// ----- PPO ------------------------------------------------------------------

Matrix log_softmax(const Matrix& logits);

/// Clipped surrogate -mean(min(r A, clip(r, 1-eps, 1+eps) A)) against the batch's stored log-probs.
double ppo_surrogate(const Network& policy, const Batch& batch, double clip);

struct PpoPolicyResult {
  double surrogate = 0.0;
  double entropy = 0.0;
  nn::Gradients grads;  // of surrogate - entropy_coef * entropy
};
PpoPolicyResult ppo_policy_loss_and_grad(const Network& policy, const Batch& batch, double clip,
                                         double entropy_coef);
/// Surrogate alone with its gradient (the landscape / sharpness objective).
nn::LossAndGrad ppo_surrogate_and_grad(const Network& policy, const Batch& batch, double clip);
/// Mean squared error against the batch's value targets.
nn::LossAndGrad ppo_value_loss_and_grad(const Network& value, const Batch& batch);

// ----- SAC ------------------------------------------------------------------

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;
inline constexpr double kSquashEps = 1e-6;

/// tanh-squashed Gaussian sample a = tanh(mean + std * noise) from a policy output
/// whose first half of rows is the mean and second half the (clamped) log-std.
struct SquashedSample {
  Matrix actions;
  Vector log_probs;
  Matrix mean;
  Matrix log_std;
  Matrix stddev;
  Matrix clamp_active;  // 1 where log-std is inside its clamp range
};
SquashedSample squashed_sample(const Matrix& policy_out, const Matrix& noise);

Matrix q_input(const Matrix& states, const Matrix& actions);

/// mean((Q(s, a) - (r + gamma (1 - d) V_target(s')))^2)
nn::LossAndGrad sac_q_loss_and_grad(const Network& q, const Network& target_value, const Batch& batch,
                                    double gamma);
/// mean((V(s) - (min Q(s, a~) - alpha log pi(a~|s)))^2), a~ drawn with `noise`
nn::LossAndGrad sac_value_loss_and_grad(const Network& value, const Network& policy, const Network& q1,
                                        const Network& q2, const Batch& batch, const Matrix& noise, double alpha);
/// mean(alpha log pi(a~|s) - min(Q1, Q2)(s, a~)), reparameterized through `noise`
nn::LossAndGrad sac_policy_loss_and_grad(const Network& policy, const Network& q1, const Network& q2,
                                         const Batch& batch, const Matrix& noise, double alpha);
double sac_policy_loss(const Network& policy, const Network& q1, const Network& q2, const Batch& batch,
                       const Matrix& noise, double alpha);

}  // namespace s2d::agents
