#include "agents/replay_buffer.hpp"

#include <cstring>

#include "common/error.hpp"
#include "common/hash.hpp"

namespace s2d::agents {

Batch make_batch(std::span<const Transition> items) {
  require(!items.empty(), ErrorCode::Precondition, "cannot build an empty batch");
  const auto n = static_cast<Eigen::Index>(items.size());
  const auto obs = items.front().state.size();
  const auto act = items.front().action.size();
  Batch b;
  b.states.resize(obs, n);
  b.actions.resize(act, n);
  b.next_states.resize(obs, n);
  b.rewards.resize(n);
  b.dones.resize(n);
  b.log_probs.resize(n);
  b.advantages.resize(n);
  b.value_targets.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& t = items[static_cast<std::size_t>(i)];
    require(t.state.size() == obs && t.next_state.size() == obs && t.action.size() == act,
            ErrorCode::DimensionMismatch, "transitions in a batch must share shapes");
    b.states.col(i) = t.state;
    b.actions.col(i) = t.action;
    b.next_states.col(i) = t.next_state;
    b.rewards[i] = t.reward;
    b.dones[i] = t.done ? 1.0 : 0.0;
    b.log_probs[i] = t.log_prob;
    b.advantages[i] = t.advantage;
    b.value_targets[i] = t.value_target;
    b.episodes.push_back(t.episode);
  }
  return b;
}

std::uint64_t Batch::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&](const auto& m) {
    h = fnv1a(std::string_view(reinterpret_cast<const char*>(m.data()), sizeof(double) * m.size()), h);
  };
  feed(states);
  feed(actions);
  feed(rewards);
  feed(next_states);
  feed(dones);
  feed(log_probs);
  feed(advantages);
  feed(value_targets);
  return h;
}

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  auto cols = nlohmann::json::array();
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    Eigen::VectorXd c = m.col(j);
    cols.push_back(std::vector<double>(c.data(), c.data() + c.size()));
  }
  return cols;
}

Eigen::MatrixXd matrix_from(const nlohmann::json& cols) {
  if (cols.empty()) return {};
  const auto rows = static_cast<Eigen::Index>(cols.front().size());
  Eigen::MatrixXd m(rows, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    auto v = cols[j].get<std::vector<double>>();
    require(static_cast<Eigen::Index>(v.size()) == rows, ErrorCode::InvalidSpec, "ragged matrix in batch file");
    m.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Eigen::VectorXd>(v.data(), rows);
  }
  return m;
}

nlohmann::json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from(const nlohmann::json& j) {
  auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

nlohmann::json to_json(const Batch& b) {
  nlohmann::json j;
  j["version"] = 1;
  j["states"] = matrix_json(b.states);
  j["actions"] = matrix_json(b.actions);
  j["rewards"] = vector_json(b.rewards);
  j["next_states"] = matrix_json(b.next_states);
  j["dones"] = vector_json(b.dones);
  j["log_probs"] = vector_json(b.log_probs);
  j["advantages"] = vector_json(b.advantages);
  j["value_targets"] = vector_json(b.value_targets);
  j["episodes"] = b.episodes;
  return j;
}

Batch batch_from_json(const nlohmann::json& j) {
  try {
    Batch b;
    b.states = matrix_from(j.at("states"));
    b.actions = matrix_from(j.at("actions"));
    b.rewards = vector_from(j.at("rewards"));
    b.next_states = matrix_from(j.at("next_states"));
    b.dones = vector_from(j.at("dones"));
    b.log_probs = vector_from(j.at("log_probs"));
    b.advantages = vector_from(j.at("advantages"));
    b.value_targets = vector_from(j.at("value_targets"));
    b.episodes = j.at("episodes").get<std::vector<std::uint64_t>>();
    const auto n = b.states.cols();
    require(n > 0 && b.actions.cols() == n && b.next_states.cols() == n && b.rewards.size() == n &&
                b.dones.size() == n && b.log_probs.size() == n && b.advantages.size() == n &&
                b.value_targets.size() == n,
            ErrorCode::InvalidSpec, "inconsistent batch sizes");
    return b;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidSpec, std::string("malformed batch: ") + e.what());
  }
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  require(capacity > 0, ErrorCode::InvalidSpec, "replay buffer capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(t));
}

std::vector<Transition> ReplayBuffer::deterministic_sample(std::size_t size) const {
  require(!items_.empty(), ErrorCode::Precondition, "deterministic_sample on an empty buffer");
  require(size > 0, ErrorCode::Precondition, "deterministic_sample size must be positive");
  std::size_t n = std::min(size, items_.size());
  return {items_.end() - static_cast<std::ptrdiff_t>(n), items_.end()};
}

Batch ReplayBuffer::deterministic_batch(std::size_t size) const {
  auto items = deterministic_sample(size);
  return make_batch(items);
}

}  // namespace s2d::agents
