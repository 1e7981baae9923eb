#include "agents/trainer.hpp"

#include "common/error.hpp"

namespace s2d::agents {

Trainer::Trainer(env::Environment env, std::unique_ptr<Agent> agent, reward::CurriculumSpec curriculum,
                 Budget budget, std::uint64_t env_seed)
    : env_(std::move(env)),
      agent_(std::move(agent)),
      curriculum_(std::move(curriculum)),
      budget_(budget),
      env_seed_(env_seed),
      diam_(env::diameter(env_.spec())) {
  require(agent_ != nullptr, ErrorCode::Precondition, "trainer needs an agent");
  require(budget_.total > 0, ErrorCode::InvalidSpec, "training budget must be positive");
  reward::validate(curriculum_);
  require((agent_->algorithm() == Algorithm::Sac) != env_.discrete(), ErrorCode::InvalidSpec,
          "SAC needs the continuous point reacher; DQN and PPO need a gridworld");
}

Trainer::Trainer(const Trainer& o)
    : env_(o.env_),
      agent_(o.agent_->clone()),
      curriculum_(o.curriculum_),
      budget_(o.budget_),
      env_seed_(o.env_seed_),
      diam_(o.diam_),
      episodes_(o.episodes_),
      env_steps_(o.env_steps_),
      in_episode_(o.in_episode_),
      obs_(o.obs_),
      current_(o.current_),
      loss_sum_(o.loss_sum_) {}

Trainer& Trainer::operator=(const Trainer& o) {
  if (this != &o) *this = Trainer(o);
  return *this;
}

std::uint64_t Trainer::time() const noexcept {
  return curriculum_.unit == reward::TimeUnit::Episodes ? episodes_ : env_steps_;
}

bool Trainer::finished() const noexcept {
  return budget_.unit == reward::TimeUnit::Episodes ? episodes_ >= budget_.total : env_steps_ >= budget_.total;
}

void Trainer::set_curriculum(reward::CurriculumSpec c) {
  reward::validate(c);
  curriculum_ = std::move(c);
}

void Trainer::begin_episode() {
  const double used = budget_.unit == reward::TimeUnit::Episodes ? static_cast<double>(episodes_)
                                                                 : static_cast<double>(env_steps_);
  agent_->begin_episode(used / static_cast<double>(budget_.total));
  obs_ = env_.reset(env_seed_, episodes_);
  current_ = EpisodeRecord{};
  current_.episode = episodes_;
  current_.stage = reward::stage_index(time(), curriculum_);
  loss_sum_ = 0.0;
  in_episode_ = true;
}

std::optional<EpisodeRecord> Trainer::step() {
  require(!finished(), ErrorCode::ContractViolation, "training budget already spent");
  if (!in_episode_) begin_episode();

  const std::uint64_t t = time();
  const Eigen::Vector2d pos = env_.agent_position();
  auto act = agent_->act(obs_, ActMode::Explore);
  auto out = env_.step(agent_->env_action(act));

  reward::PotentialSpec pot{diam_, out.info.goal_pos};
  Transition tr;
  tr.state = obs_;
  tr.action = act.action;
  tr.reward = reward::schedule_reward(curriculum_, pot, t, out.base_reward, pos, out.info.agent_pos);
  tr.next_state = out.next_obs;
  tr.done = out.done;
  tr.episode = episodes_;
  tr.log_prob = act.log_prob;
  tr.value = act.value;

  ++env_steps_;
  auto stats = agent_->observe(tr);
  current_.ret += out.base_reward;
  current_.length += 1;
  current_.success = current_.success || out.info.success;
  current_.updates += stats.updates;
  loss_sum_ += stats.loss_main * static_cast<double>(stats.updates);
  obs_ = out.next_obs;

  if (!out.done) return std::nullopt;
  in_episode_ = false;
  ++episodes_;
  current_.env_step = env_steps_;
  current_.loss_main = current_.updates ? loss_sum_ / static_cast<double>(current_.updates) : 0.0;
  current_.exploration = agent_->exploration_stat();
  return current_;
}

void Trainer::run(const std::function<void(const EpisodeRecord&)>& on_episode) {
  while (!finished()) {
    auto rec = step();
    if (rec && on_episode) on_episode(*rec);
  }
}

}  // namespace s2d::agents
