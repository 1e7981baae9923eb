#include <algorithm>
#include <cmath>
#include <numeric>

#include "agents/algorithms.hpp"
#include "common/error.hpp"
#include "common/seeding.hpp"

namespace s2d::agents {

void compute_gae(std::vector<Transition>& rollout, double gamma, double lambda) {
  require(!rollout.empty(), ErrorCode::Precondition, "GAE needs a nonempty rollout");
  require(rollout.back().done, ErrorCode::Precondition, "rollout must end on an episode boundary");
  double running = 0.0;
  for (std::size_t k = rollout.size(); k-- > 0;) {
    auto& t = rollout[k];
    double next_v = t.done ? 0.0 : rollout[k + 1].value;
    double delta = t.reward + gamma * next_v - t.value;
    running = delta + (t.done ? 0.0 : gamma * lambda * running);
    t.advantage = running;
    t.value_target = running + t.value;
  }
  const double n = static_cast<double>(rollout.size());
  double mean = 0.0;
  for (const auto& t : rollout) mean += t.advantage / n;
  double var = 0.0;
  for (const auto& t : rollout) var += (t.advantage - mean) * (t.advantage - mean) / n;
  const double sd = std::sqrt(var) + 1e-8;
  for (auto& t : rollout) t.advantage = (t.advantage - mean) / sd;
}

PpoAgent::PpoAgent(const AgentConfig& cfg, std::size_t obs_dim, std::size_t num_actions, std::uint64_t seed)
    : cfg_(cfg),
      num_actions_(num_actions),
      policy_(nn::Network::mlp({obs_dim, cfg.hidden, cfg.hidden, num_actions}, derive_seed({seed, 1}))),
      value_(nn::Network::mlp({obs_dim, cfg.hidden, cfg.hidden, 1}, derive_seed({seed, 3}))),
      policy_opt_(nn::AdamState::for_network(policy_, cfg.lr)),
      value_opt_(nn::AdamState::for_network(value_, cfg.lr)),
      rng_(derive_seed({seed, 2})),
      buffer_(cfg.buffer_capacity) {}

ActResult PpoAgent::act(const Eigen::VectorXd& obs, ActMode mode) {
  require(static_cast<std::size_t>(obs.size()) == policy_.input_dim(), ErrorCode::DimensionMismatch,
          "observation size does not match the policy");
  Matrix logp = log_softmax(policy_.forward(Matrix(obs)));
  Eigen::Index a = 0;
  if (mode == ActMode::Explore) {
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
    double acc = 0.0;
    a = logp.rows() - 1;
    for (Eigen::Index k = 0; k < logp.rows(); ++k) {
      acc += std::exp(logp(k, 0));
      if (u < acc) {
        a = k;
        break;
      }
    }
  } else {
    logp.col(0).maxCoeff(&a);
  }
  ActResult r;
  r.action = Eigen::VectorXd::Constant(1, static_cast<double>(a));
  r.log_prob = logp(a, 0);
  r.value = value_.forward(obs)[0];
  return r;
}

PpoUpdateResult PpoAgent::update(std::vector<Transition> rollout) {
  compute_gae(rollout, cfg_.gamma, cfg_.gae_lambda);
  for (const auto& t : rollout) buffer_.push(t);

  PpoUpdateResult out;
  std::vector<std::size_t> order(rollout.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Transition> mb;
  for (std::size_t epoch = 0; epoch < cfg_.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng_);
    for (std::size_t start = 0; start < order.size(); start += cfg_.minibatch) {
      const std::size_t end = std::min(order.size(), start + cfg_.minibatch);
      mb.clear();
      for (std::size_t k = start; k < end; ++k) mb.push_back(rollout[order[k]]);
      Batch batch = make_batch(mb);

      auto pol = ppo_policy_loss_and_grad(policy_, batch, cfg_.clip, cfg_.entropy_coef);
      auto val = ppo_value_loss_and_grad(value_, batch);
      val.grads.values *= cfg_.value_coef;
      nn::adam_step(policy_, pol.grads, policy_opt_);
      nn::adam_step(value_, val.grads, value_opt_);
      ++update_count_;

      out.policy_loss += pol.surrogate;
      out.value_loss += val.loss;
      out.entropy += pol.entropy;
      ++out.steps;
    }
  }
  const double k = static_cast<double>(out.steps);
  out.policy_loss /= k;
  out.value_loss /= k;
  out.entropy /= k;
  last_entropy_ = out.entropy;
  return out;
}

UpdateStats PpoAgent::observe(const Transition& t) {
  rollout_.push_back(t);
  ++train_steps_;
  UpdateStats s;
  if (t.done && ++rollout_episodes_ >= cfg_.episodes_per_update) {
    auto r = update(std::move(rollout_));
    rollout_.clear();
    rollout_episodes_ = 0;
    s.updates = r.steps;
    s.loss_main = r.policy_loss;
    s.aux = r.entropy;
  }
  return s;
}

AgentSnapshot PpoAgent::snapshot() const {
  AgentSnapshot s;
  s.algorithm = Algorithm::Ppo;
  s.networks.emplace("policy", policy_);
  s.networks.emplace("value", value_);
  s.config = cfg_;
  s.action_size = num_actions_;
  s.train_steps = train_steps_;
  s.update_count = update_count_;
  return s;
}

}  // namespace s2d::agents
