#include "agents/agent.hpp"

#include <fstream>
#include <set>

#include "agents/algorithms.hpp"
#include "common/error.hpp"
#include "nn/serialize.hpp"

namespace s2d::agents {

using nlohmann::json;

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Dqn: return "dqn";
    case Algorithm::Ppo: return "ppo";
    case Algorithm::Sac: return "sac";
  }
  return "?";
}

std::optional<Algorithm> parse_algorithm(const std::string& s) {
  if (s == "dqn" || s == "DQN") return Algorithm::Dqn;
  if (s == "ppo" || s == "PPO") return Algorithm::Ppo;
  if (s == "sac" || s == "SAC") return Algorithm::Sac;
  return std::nullopt;
}

void validate(const AgentConfig& c) {
  auto pos = [](bool ok, const char* name) {
    require(ok, ErrorCode::InvalidSpec, std::string("agent.") + name + " must be positive");
  };
  pos(c.lr > 0, "lr");
  require(c.gamma > 0 && c.gamma <= 1, ErrorCode::InvalidSpec, "agent.gamma must be in (0, 1]");
  pos(c.batch_size > 0, "batch_size");
  require(c.entropy_coef >= 0, ErrorCode::InvalidSpec, "agent.entropy_coef must be non-negative");
  pos(c.hidden > 0, "hidden");
  pos(c.buffer_capacity > 0, "buffer_capacity");
  require(c.eps_start >= 0 && c.eps_start <= 1 && c.eps_end >= 0 && c.eps_end <= 1, ErrorCode::InvalidSpec,
          "agent.eps_start and agent.eps_end must be in [0, 1]");
  pos(c.eps_decay_fraction > 0, "eps_decay_fraction");
  pos(c.target_update_every > 0, "target_update_every");
  pos(c.clip > 0, "clip");
  require(c.gae_lambda >= 0 && c.gae_lambda <= 1, ErrorCode::InvalidSpec, "agent.gae_lambda must be in [0, 1]");
  pos(c.epochs > 0, "epochs");
  pos(c.minibatch > 0, "minibatch");
  pos(c.episodes_per_update > 0, "episodes_per_update");
  pos(c.value_coef > 0, "value_coef");
  require(c.sac_alpha >= 0, ErrorCode::InvalidSpec, "agent.sac_alpha must be non-negative");
  require(c.tau > 0 && c.tau <= 1, ErrorCode::InvalidSpec, "agent.tau must be in (0, 1]");
  pos(c.action_scale > 0, "action_scale");
}

#define S2D_AGENT_FIELDS(X)                                                                                    \
  X(lr) X(gamma) X(batch_size) X(entropy_coef) X(hidden) X(buffer_capacity) X(eps_start) X(eps_end)            \
      X(eps_decay_fraction) X(target_update_every) X(clip) X(gae_lambda) X(epochs) X(minibatch)                \
          X(episodes_per_update) X(value_coef) X(sac_alpha) X(tau) X(action_scale)

json to_json(const AgentConfig& c) {
  json j;
#define X(f) j[#f] = c.f;
  S2D_AGENT_FIELDS(X)
#undef X
  return j;
}

AgentConfig agent_config_from_json(const json& j, std::vector<std::string>* unknown) {
  require(j.is_object(), ErrorCode::InvalidSpec, "agent config must be an object");
  AgentConfig c;
  std::set<std::string> known;
#define X(f)                                                                                          \
  known.insert(#f);                                                                                   \
  if (j.contains(#f)) {                                                                               \
    const auto& v = j.at(#f);                                                                         \
    require(v.is_number(), ErrorCode::InvalidSpec, "agent." #f " must be a number");                  \
    if constexpr (std::is_integral_v<decltype(c.f)>) {                                                \
      require(v.is_number_integer() && v.get<long long>() >= 0, ErrorCode::InvalidSpec,               \
              "agent." #f " must be a non-negative integer");                                         \
    }                                                                                                 \
    c.f = v.get<decltype(c.f)>();                                                                     \
  }
  S2D_AGENT_FIELDS(X)
#undef X
  if (unknown) {
    for (auto it = j.begin(); it != j.end(); ++it)
      if (!known.count(it.key())) unknown->push_back(it.key());
  }
  return c;
}

const nn::Network& AgentSnapshot::net(const std::string& name) const {
  auto it = networks.find(name);
  require(it != networks.end(), ErrorCode::InvalidSpec, "snapshot has no network '" + name + "'");
  return it->second;
}

const std::string& probed_network(Algorithm a) {
  static const std::string q = "q_online", p = "policy";
  return a == Algorithm::Dqn ? q : p;
}

json to_json(const AgentSnapshot& s) {
  json j;
  j["version"] = nn::kSnapshotVersion;
  j["algorithm"] = to_string(s.algorithm);
  j["config"] = to_json(s.config);
  j["action_size"] = s.action_size;
  j["train_steps"] = s.train_steps;
  j["update_count"] = s.update_count;
  json nets = json::object();
  for (const auto& [name, net] : s.networks) nets[name] = nn::to_json(net);
  j["networks"] = std::move(nets);
  return j;
}

AgentSnapshot snapshot_from_json(const json& doc) {
  try {
    require(doc.value("version", -1) == nn::kSnapshotVersion, ErrorCode::InvalidSpec,
            "unsupported snapshot version");
    AgentSnapshot s;
    auto alg = parse_algorithm(doc.at("algorithm").get<std::string>());
    require(alg.has_value(), ErrorCode::InvalidSpec, "unknown algorithm in snapshot");
    s.algorithm = *alg;
    s.config = agent_config_from_json(doc.at("config"));
    s.action_size = doc.at("action_size").get<std::size_t>();
    s.train_steps = doc.at("train_steps").get<std::uint64_t>();
    s.update_count = doc.at("update_count").get<std::uint64_t>();
    for (const auto& [name, net] : doc.at("networks").items()) s.networks.emplace(name, nn::network_from_json(net));
    s.net(probed_network(s.algorithm));
    return s;
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidSpec, std::string("malformed agent snapshot: ") + e.what());
  }
}

void save_snapshot(const AgentSnapshot& snap, const std::string& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + path);
  out << to_json(snap).dump() << '\n';
  require(static_cast<bool>(out), ErrorCode::Io, "write failed: " + path);
}

AgentSnapshot load_snapshot(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot read " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidSpec, path + ": " + e.what());
  }
  return snapshot_from_json(doc);
}

std::unique_ptr<Agent> make_agent(Algorithm algorithm, const AgentConfig& cfg, std::size_t obs_dim,
                                  std::size_t action_size, std::uint64_t seed) {
  validate(cfg);
  require(obs_dim > 0 && action_size > 0, ErrorCode::InvalidSpec, "agent needs positive observation and action sizes");
  switch (algorithm) {
    case Algorithm::Dqn: return std::make_unique<DqnAgent>(cfg, obs_dim, action_size, seed);
    case Algorithm::Ppo: return std::make_unique<PpoAgent>(cfg, obs_dim, action_size, seed);
    case Algorithm::Sac: return std::make_unique<SacAgent>(cfg, obs_dim, action_size, seed);
  }
  fail(ErrorCode::InvalidSpec, "unknown algorithm");
}

Batch sample_uniform(const ReplayBuffer& buffer, std::size_t n, std::mt19937_64& rng) {
  require(!buffer.empty(), ErrorCode::Precondition, "cannot sample from an empty buffer");
  std::uniform_int_distribution<std::size_t> pick(0, buffer.size() - 1);
  std::vector<Transition> items;
  items.reserve(n);
  for (std::size_t i = 0; i < n; ++i) items.push_back(buffer[pick(rng)]);
  return make_batch(items);
}

}  // namespace s2d::agents
