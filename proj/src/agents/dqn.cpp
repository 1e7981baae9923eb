#include <algorithm>

#include "agents/algorithms.hpp"
#include "common/error.hpp"
#include "common/seeding.hpp"

namespace s2d::agents {

namespace {

int argmax(const Eigen::VectorXd& q) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < q.size(); ++i)
    if (q[i] > q[best]) best = i;
  return static_cast<int>(best);
}

}  // namespace

DqnAgent::DqnAgent(const AgentConfig& cfg, std::size_t obs_dim, std::size_t num_actions, std::uint64_t seed)
    : cfg_(cfg),
      num_actions_(num_actions),
      online_(nn::Network::mlp({obs_dim, cfg.hidden, cfg.hidden, num_actions}, derive_seed({seed, 1}))),
      target_(online_),
      opt_(nn::AdamState::for_network(online_, cfg.lr)),
      rng_(derive_seed({seed, 2})),
      buffer_(cfg.buffer_capacity),
      epsilon_(cfg.eps_start) {}

ActResult DqnAgent::act(const Eigen::VectorXd& obs, ActMode mode) {
  require(static_cast<std::size_t>(obs.size()) == online_.input_dim(), ErrorCode::DimensionMismatch,
          "observation size does not match the Q network");
  ActResult r;
  int a;
  if (mode == ActMode::Explore && std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < epsilon_) {
    a = static_cast<int>(std::uniform_int_distribution<std::size_t>(0, num_actions_ - 1)(rng_));
  } else {
    a = argmax(online_.forward(obs));
  }
  r.action = Eigen::VectorXd::Constant(1, a);
  return r;
}

void DqnAgent::begin_episode(double progress) {
  double frac = std::clamp(progress / cfg_.eps_decay_fraction, 0.0, 1.0);
  epsilon_ = cfg_.eps_start + (cfg_.eps_end - cfg_.eps_start) * frac;
}

double DqnAgent::update(const Batch& batch) {
  Vector targets = dqn_targets(target_, batch, cfg_.gamma);
  auto lg = dqn_td_loss_and_grad(online_, batch, targets);
  nn::adam_step(online_, lg.grads, opt_);
  ++update_count_;
  if (update_count_ % cfg_.target_update_every == 0) target_ = online_;
  return lg.loss;
}

UpdateStats DqnAgent::observe(const Transition& t) {
  buffer_.push(t);
  ++train_steps_;
  UpdateStats s;
  if (buffer_.size() >= cfg_.batch_size) {
    s.loss_main = update(sample_uniform(buffer_, cfg_.batch_size, rng_));
    s.updates = 1;
  }
  return s;
}

void DqnAgent::set_networks(nn::Network online, nn::Network target) {
  require(online.same_shape(online_) && target.same_shape(online_), ErrorCode::DimensionMismatch,
          "replacement Q networks must keep the architecture");
  online_ = std::move(online);
  target_ = std::move(target);
}

AgentSnapshot DqnAgent::snapshot() const {
  AgentSnapshot s;
  s.algorithm = Algorithm::Dqn;
  s.networks.emplace("q_online", online_);
  s.networks.emplace("q_target", target_);
  s.config = cfg_;
  s.action_size = num_actions_;
  s.train_steps = train_steps_;
  s.update_count = update_count_;
  return s;
}

}  // namespace s2d::agents
