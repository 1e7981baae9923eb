#include "agents/algorithms.hpp"
#include "common/error.hpp"
#include "common/seeding.hpp"

namespace s2d::agents {

namespace {

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = n01(rng);
  return m;
}

}  // namespace

SacAgent::SacAgent(const AgentConfig& cfg, std::size_t obs_dim, std::size_t action_dim, std::uint64_t seed)
    : cfg_(cfg),
      action_dim_(action_dim),
      policy_(nn::Network::mlp({obs_dim, cfg.hidden, cfg.hidden, 2 * action_dim}, derive_seed({seed, 1}))),
      q1_(nn::Network::mlp({obs_dim + action_dim, cfg.hidden, cfg.hidden, 1}, derive_seed({seed, 4}))),
      q2_(nn::Network::mlp({obs_dim + action_dim, cfg.hidden, cfg.hidden, 1}, derive_seed({seed, 5}))),
      value_(nn::Network::mlp({obs_dim, cfg.hidden, cfg.hidden, 1}, derive_seed({seed, 3}))),
      target_value_(value_),
      policy_opt_(nn::AdamState::for_network(policy_, cfg.lr)),
      q1_opt_(nn::AdamState::for_network(q1_, cfg.lr)),
      q2_opt_(nn::AdamState::for_network(q2_, cfg.lr)),
      value_opt_(nn::AdamState::for_network(value_, cfg.lr)),
      rng_(derive_seed({seed, 2})),
      buffer_(cfg.buffer_capacity) {}

ActResult SacAgent::act(const Eigen::VectorXd& obs, ActMode mode) {
  require(static_cast<std::size_t>(obs.size()) == policy_.input_dim(), ErrorCode::DimensionMismatch,
          "observation size does not match the policy");
  const auto act = static_cast<Eigen::Index>(action_dim_);
  Matrix noise = mode == ActMode::Explore ? gaussian(act, 1, rng_) : Matrix::Zero(act, 1);
  auto s = squashed_sample(policy_.forward(Matrix(obs)), noise);
  ActResult r;
  r.action = s.actions.col(0);
  r.log_prob = s.log_probs[0];
  return r;
}

SacUpdateResult SacAgent::update(const Batch& batch) {
  require(batch.size() > 0, ErrorCode::Precondition, "SAC update needs a nonempty batch");
  Matrix noise = gaussian(static_cast<Eigen::Index>(action_dim_), static_cast<Eigen::Index>(batch.size()), rng_);

  auto lq1 = sac_q_loss_and_grad(q1_, target_value_, batch, cfg_.gamma);
  auto lq2 = sac_q_loss_and_grad(q2_, target_value_, batch, cfg_.gamma);
  auto lv = sac_value_loss_and_grad(value_, policy_, q1_, q2_, batch, noise, cfg_.sac_alpha);
  auto lp = sac_policy_loss_and_grad(policy_, q1_, q2_, batch, noise, cfg_.sac_alpha);
  last_entropy_ = -squashed_sample(policy_.forward(batch.states), noise).log_probs.mean();

  nn::adam_step(q1_, lq1.grads, q1_opt_);
  nn::adam_step(q2_, lq2.grads, q2_opt_);
  nn::adam_step(value_, lv.grads, value_opt_);
  nn::adam_step(policy_, lp.grads, policy_opt_);
  target_value_.params() = cfg_.tau * value_.params() + (1.0 - cfg_.tau) * target_value_.params();
  ++update_count_;
  return {lq1.loss, lq2.loss, lv.loss, lp.loss};
}

UpdateStats SacAgent::observe(const Transition& t) {
  buffer_.push(t);
  ++train_steps_;
  UpdateStats s;
  if (buffer_.size() >= cfg_.batch_size) {
    auto r = update(sample_uniform(buffer_, cfg_.batch_size, rng_));
    s.updates = 1;
    s.loss_main = r.policy_loss;
    s.aux = last_entropy_;
  }
  return s;
}

AgentSnapshot SacAgent::snapshot() const {
  AgentSnapshot s;
  s.algorithm = Algorithm::Sac;
  s.networks.emplace("policy", policy_);
  s.networks.emplace("soft_q1", q1_);
  s.networks.emplace("soft_q2", q2_);
  s.networks.emplace("value", value_);
  s.networks.emplace("target_value", target_value_);
  s.config = cfg_;
  s.action_size = action_dim_;
  s.train_steps = train_steps_;
  s.update_count = update_count_;
  return s;
}

}  // namespace s2d::agents
