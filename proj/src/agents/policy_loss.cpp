#include "agents/policy_loss.hpp"

#include <cmath>
#include <random>

#include "common/error.hpp"
#include "common/seeding.hpp"

namespace s2d::agents {

namespace {

constexpr std::uint64_t kEvalNoiseStream = 0x5ac0;

void check_batch(const AgentSnapshot& s, const Batch& b) {
  require(b.size() > 0, ErrorCode::Precondition, "policy loss needs a nonempty batch");
  const auto& probe = s.net(probed_network(s.algorithm));
  require(static_cast<std::size_t>(b.states.rows()) == probe.input_dim(),
          ErrorCode::DimensionMismatch, "batch observations do not match the agent");
  if (s.algorithm == Algorithm::Sac) {
    require(static_cast<std::size_t>(b.actions.rows()) == s.action_size, ErrorCode::DimensionMismatch,
            "SAC needs continuous actions of the agent's dimension");
  } else {
    require(b.actions.rows() == 1, ErrorCode::DimensionMismatch, "discrete agents need index actions");
    for (Eigen::Index i = 0; i < b.actions.cols(); ++i) {
      double a = b.actions(0, i);
      require(a >= 0 && a < static_cast<double>(s.action_size) && a == std::floor(a), ErrorCode::DimensionMismatch,
              "batch action is not a valid discrete index for this agent");
    }
  }
}

}  // namespace

PolicyLossEvaluator::PolicyLossEvaluator(AgentSnapshot snapshot, Batch batch, std::uint64_t eval_seed)
    : snap_(std::make_shared<const AgentSnapshot>(std::move(snapshot))),
      batch_(std::make_shared<const Batch>(std::move(batch))),
      eval_seed_(eval_seed) {
  check_batch(*snap_, *batch_);
  switch (snap_->algorithm) {
    case Algorithm::Dqn:
      dqn_targets_ = dqn_targets(snap_->net("q_target"), *batch_, snap_->config.gamma);
      break;
    case Algorithm::Sac: {
      std::mt19937_64 rng(derive_seed({eval_seed, kEvalNoiseStream}));
      std::normal_distribution<double> n01(0.0, 1.0);
      sac_noise_.resize(static_cast<Eigen::Index>(snap_->action_size), static_cast<Eigen::Index>(batch_->size()));
      for (Eigen::Index j = 0; j < sac_noise_.cols(); ++j)
        for (Eigen::Index i = 0; i < sac_noise_.rows(); ++i) sac_noise_(i, j) = n01(rng);
      break;
    }
    case Algorithm::Ppo:
      break;
  }
}

const nn::Network& PolicyLossEvaluator::base() const { return snap_->net(probed_network(snap_->algorithm)); }

void PolicyLossEvaluator::check_probe(const nn::Network& probe) const {
  require(probe.same_shape(base()), ErrorCode::DimensionMismatch, "probe network does not match the probed network");
}

double PolicyLossEvaluator::operator()(const nn::Network& probe) const {
  check_probe(probe);
  switch (snap_->algorithm) {
    case Algorithm::Dqn: return dqn_td_loss(probe, *batch_, dqn_targets_);
    case Algorithm::Ppo: return ppo_surrogate(probe, *batch_, snap_->config.clip);
    case Algorithm::Sac:
      return sac_policy_loss(probe, snap_->net("soft_q1"), snap_->net("soft_q2"), *batch_, sac_noise_,
                             snap_->config.sac_alpha);
  }
  fail(ErrorCode::Unsupported, "unknown algorithm");
}

nn::LossAndGrad PolicyLossEvaluator::with_grad(const nn::Network& probe) const {
  check_probe(probe);
  switch (snap_->algorithm) {
    case Algorithm::Dqn: return dqn_td_loss_and_grad(probe, *batch_, dqn_targets_);
    case Algorithm::Ppo: return ppo_surrogate_and_grad(probe, *batch_, snap_->config.clip);
    case Algorithm::Sac:
      return sac_policy_loss_and_grad(probe, snap_->net("soft_q1"), snap_->net("soft_q2"), *batch_, sac_noise_,
                                      snap_->config.sac_alpha);
  }
  fail(ErrorCode::Unsupported, "unknown algorithm");
}

double policy_loss_eval(const AgentSnapshot& snapshot, const Batch& batch, std::uint64_t eval_seed) {
  PolicyLossEvaluator eval(snapshot, batch, eval_seed);
  return eval(eval.base());
}

}  // namespace s2d::agents
