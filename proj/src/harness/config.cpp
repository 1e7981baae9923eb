#include "harness/config.hpp"

#include <fstream>
#include <set>

#include "common/error.hpp"
#include "common/hash.hpp"

namespace s2d::harness {

using nlohmann::json;

namespace {

bool non_negative_integer(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

std::string describe(const std::vector<ConfigIssue>& issues) {
  std::string s = "invalid experiment config:";
  for (const auto& i : issues) s += "\n  " + i.path + ": " + i.message;
  return s;
}

// Collects every problem instead of stopping at the first one.
class Reader {
 public:
  std::vector<ConfigIssue> issues;
  std::vector<std::string>* warnings = nullptr;

  void issue(const std::string& path, const std::string& msg) { issues.push_back({path, msg}); }
  void warn(const std::string& msg) {
    if (warnings) warnings->push_back(msg);
  }

  void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> known) {
    std::set<std::string> k(known.begin(), known.end());
    for (auto it = obj.begin(); it != obj.end(); ++it)
      if (!k.count(it.key())) warn("ignoring unknown key " + path + "." + it.key());
  }

  template <class T>
  void get(const json& obj, const char* key, const std::string& path, T& out) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    const std::string p = path + "." + key;
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) return issue(p, "expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!non_negative_integer(v)) return issue(p, "expected a non-negative integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) return issue(p, "expected a number");
    } else {
      if (!v.is_string()) return issue(p, "expected a string");
    }
    out = v.get<T>();
  }

  bool cell(const json& v, const std::string& path, env::Cell& out) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer()) {
      issue(path, "expected [x, y] integers");
      return false;
    }
    out = {v[0].get<int>(), v[1].get<int>()};
    return true;
  }

  bool u64_list(const json& v, const std::string& path, std::vector<std::uint64_t>& out) {
    if (!v.is_array()) {
      issue(path, "expected an array of non-negative integers");
      return false;
    }
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!non_negative_integer(v[i])) {
        issue(path + "[" + std::to_string(i) + "]", "expected a non-negative integer");
        return false;
      }
      out.push_back(v[i].get<std::uint64_t>());
    }
    return true;
  }

  env::EnvSpec env(const json& j, const std::string& path) {
    if (!j.is_object()) {
      issue(path, "expected an object");
      return env::GridworldSpec::fixed_goal_4x4();
    }
    std::string kind = "gridworld";
    get(j, "kind", path, kind);
    if (kind == "point_reacher") {
      check_keys(j, path, {"kind", "action_bound", "success_radius", "time_penalty", "success_reward", "max_steps",
                           "min_start_goal_distance"});
      env::PointReacherSpec s;
      get(j, "action_bound", path, s.action_bound);
      get(j, "success_radius", path, s.success_radius);
      get(j, "time_penalty", path, s.time_penalty);
      get(j, "success_reward", path, s.success_reward);
      get(j, "max_steps", path, s.max_steps);
      get(j, "min_start_goal_distance", path, s.min_start_goal_distance);
      return s;
    }
    if (kind != "gridworld") {
      issue(path + ".kind", "expected gridworld or point_reacher");
      return env::GridworldSpec::fixed_goal_4x4();
    }
    check_keys(j, path, {"kind", "preset", "width", "height", "start", "goal_mode", "goal", "walls", "living_penalty",
                         "success_reward", "max_steps"});
    env::GridworldSpec s;
    std::string preset = "fixed_goal_4x4";
    get(j, "preset", path, preset);
    if (preset == "fixed_goal_4x4") s = env::GridworldSpec::fixed_goal_4x4();
    else if (preset == "random_goal_10x10") s = env::GridworldSpec::random_goal_10x10();
    else issue(path + ".preset", "expected fixed_goal_4x4 or random_goal_10x10");
    get(j, "width", path, s.width);
    get(j, "height", path, s.height);
    if (j.contains("start")) cell(j["start"], path + ".start", s.start);
    if (j.contains("goal")) cell(j["goal"], path + ".goal", s.goal);
    if (j.contains("goal_mode")) {
      std::string m;
      get(j, "goal_mode", path, m);
      if (m == "fixed") s.goal_mode = env::GoalMode::Fixed;
      else if (m == "random") s.goal_mode = env::GoalMode::RandomPerEpisode;
      else issue(path + ".goal_mode", "expected fixed or random");
    }
    if (j.contains("walls")) {
      const auto& w = j["walls"];
      if (!w.is_array()) {
        issue(path + ".walls", "expected a list of [x, y] cells");
      } else {
        s.walls.clear();
        for (std::size_t i = 0; i < w.size(); ++i) {
          env::Cell c;
          if (cell(w[i], path + ".walls[" + std::to_string(i) + "]", c)) s.walls.push_back(c);
        }
      }
    }
    get(j, "living_penalty", path, s.living_penalty);
    get(j, "success_reward", path, s.success_reward);
    get(j, "max_steps", path, s.max_steps);
    return s;
  }
};

json cell_json(env::Cell c) { return json::array({c.x, c.y}); }

}  // namespace

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : Error(ErrorCode::Validation, describe(issues)), issues_(std::move(issues)) {}

json env_to_json(const env::EnvSpec& spec) {
  if (const auto* g = std::get_if<env::GridworldSpec>(&spec)) {
    json walls = json::array();
    for (auto c : g->walls) walls.push_back(cell_json(c));
    return {{"kind", "gridworld"},
            {"width", g->width},
            {"height", g->height},
            {"start", cell_json(g->start)},
            {"goal_mode", g->goal_mode == env::GoalMode::Fixed ? "fixed" : "random"},
            {"goal", cell_json(g->goal)},
            {"walls", walls},
            {"living_penalty", g->living_penalty},
            {"success_reward", g->success_reward},
            {"max_steps", g->max_steps}};
  }
  const auto& p = std::get<env::PointReacherSpec>(spec);
  return {{"kind", "point_reacher"},
          {"action_bound", p.action_bound},
          {"success_radius", p.success_radius},
          {"time_penalty", p.time_penalty},
          {"success_reward", p.success_reward},
          {"max_steps", p.max_steps},
          {"min_start_goal_distance", p.min_start_goal_distance}};
}

env::EnvSpec env_from_json(const json& j) {
  Reader r;
  auto spec = r.env(j, "env");
  if (!r.issues.empty()) throw ConfigError(std::move(r.issues));
  try {
    env::validate(spec);
  } catch (const Error& e) {
    throw ConfigError(std::vector<ConfigIssue>{{"env", e.what()}});
  }
  return spec;
}

std::uint64_t preset_unit(const ExperimentConfig& cfg) {
  if (cfg.preset_n) return *cfg.preset_n;
  return cfg.budget.total / (cfg.budget.unit == reward::TimeUnit::Episodes ? 10 : 40);
}

std::vector<std::uint64_t> resolved_transitions(const ExperimentConfig& cfg) {
  if (cfg.schedule == reward::Schedule::OnlySparse || cfg.schedule == reward::Schedule::OnlyDense) {
    if (!cfg.cross_density.enabled) return {};
  }
  if (!cfg.transition_preset.empty()) {
    const std::uint64_t k = static_cast<std::uint64_t>(cfg.transition_preset.back() - '0');
    return {k * preset_unit(cfg)};
  }
  return cfg.transitions;
}

reward::CurriculumSpec curriculum_of(const ExperimentConfig& cfg) {
  reward::CurriculumSpec c;
  c.schedule = cfg.schedule;
  c.unit = cfg.unit;
  c.gamma = cfg.gamma;
  if (cfg.schedule == reward::Schedule::S2D || cfg.schedule == reward::Schedule::D2S)
    c.transitions = resolved_transitions(cfg);
  return c;
}

void validate(const ExperimentConfig& cfg, std::vector<std::string>* warnings) {
  Reader r;
  r.warnings = warnings;
  try {
    env::validate(cfg.env);
  } catch (const Error& e) {
    r.issue("env", e.what());
  }
  try {
    agents::validate(cfg.agent);
  } catch (const Error& e) {
    r.issue("agent", e.what());
  }
  if (cfg.run_id.empty() || cfg.run_id.find_first_of("/\\") != std::string::npos)
    r.issue("run_id", "must be a nonempty name without path separators");
  const bool continuous = std::holds_alternative<env::PointReacherSpec>(cfg.env);
  if ((cfg.algorithm == agents::Algorithm::Sac) != continuous)
    r.issue("algorithm", "SAC requires env.kind point_reacher; DQN and PPO require a gridworld");
  if (!(cfg.gamma > 0 && cfg.gamma <= 1)) r.issue("gamma", "must be in (0, 1]");
  if (cfg.budget.total == 0) r.issue("budget.total", "must be positive");
  if (cfg.seeds.empty()) r.issue("seeds", "at least one seed is required");
  std::set<std::uint64_t> seen;
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i)
    if (!seen.insert(cfg.seeds[i]).second)
      r.issue("seeds[" + std::to_string(i) + "]", "duplicate seed " + std::to_string(cfg.seeds[i]));

  const bool staged = cfg.schedule == reward::Schedule::S2D || cfg.schedule == reward::Schedule::D2S;
  const bool has_transitions = !cfg.transitions.empty() || !cfg.transition_preset.empty();
  if (!cfg.transition_preset.empty()) {
    if (cfg.transition_preset != "C1" && cfg.transition_preset != "C2" && cfg.transition_preset != "C3")
      r.issue("transitions", "preset must be C1, C2 or C3");
    if (!cfg.transitions.empty()) r.issue("transitions", "give either a preset or explicit counts, not both");
    if (preset_unit(cfg) == 0) r.issue("preset_n", "preset unit resolves to 0; set preset_n");
  }
  if (!staged && has_transitions && !cfg.cross_density.enabled)
    r.warn("schedule " + reward::to_string(cfg.schedule) + " has a single stage; transitions are ignored");
  if ((staged || cfg.cross_density.enabled) && !has_transitions)
    r.issue("transitions", "schedule " + reward::to_string(cfg.schedule) + " needs transition times");
  if (r.issues.empty() && (staged || cfg.cross_density.enabled)) {
    auto ts = resolved_transitions(cfg);
    std::uint64_t prev = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const std::string p = "transitions[" + std::to_string(i) + "]";
      if (ts[i] <= prev) r.issue(p, "must be positive and strictly increasing");
      if (cfg.unit == cfg.budget.unit && ts[i] >= cfg.budget.total)
        r.issue(p, "must lie inside the budget of " + std::to_string(cfg.budget.total));
      prev = ts[i];
    }
  }
  if (cfg.cross_density.enabled) {
    const auto& cd = cfg.cross_density;
    if (cd.checkpoints.empty()) r.issue("cross_density.checkpoints", "at least one checkpoint is required");
    for (std::size_t i = 1; i < cd.checkpoints.size(); ++i)
      if (cd.checkpoints[i] <= cd.checkpoints[i - 1])
        r.issue("cross_density.checkpoints", "must be strictly increasing");
    if (cd.grid.steps == 0) r.issue("cross_density.grid.steps", "must be positive");
    if (!(cd.grid.half_range >= 0)) r.issue("cross_density.grid.half_range", "must be non-negative");
    if (cd.batch_size == 0) r.issue("cross_density.batch_size", "must be positive");
  }
  try {
    sharpness::validate(cfg.sharpness.cfg);
  } catch (const Error& e) {
    r.issue("sharpness", e.what());
  }
  if (cfg.output_dir.empty()) r.issue("output_dir", "must be nonempty");
  if (!r.issues.empty()) throw ConfigError(std::move(r.issues));
}

ExperimentConfig config_from_json(const json& doc, std::vector<std::string>* warnings) {
  Reader r;
  r.warnings = warnings;
  ExperimentConfig c;
  if (!doc.is_object()) throw ConfigError(std::vector<ConfigIssue>{{"$", "config must be a JSON object"}});
  r.check_keys(doc, "$", {"version", "run_id", "env", "algorithm", "agent", "schedule", "transitions", "preset_n",
                          "unit", "budget", "gamma", "seeds", "cross_density", "sharpness", "output_dir", "threads",
                          "grid_threads", "save_snapshots"});
  if (!doc.contains("version")) r.issue("version", "required (current version is " + std::to_string(kConfigVersion) + ")");
  else if (doc["version"] != kConfigVersion) r.issue("version", "unsupported version; expected " + std::to_string(kConfigVersion));

  r.get(doc, "run_id", "$", c.run_id);
  if (doc.contains("env")) c.env = r.env(doc["env"], "env");
  if (doc.contains("algorithm")) {
    std::string a;
    r.get(doc, "algorithm", "$", a);
    if (auto v = agents::parse_algorithm(a)) c.algorithm = *v;
    else r.issue("algorithm", "expected dqn, ppo or sac");
  }
  if (doc.contains("agent")) {
    try {
      std::vector<std::string> unknown;
      c.agent = agents::agent_config_from_json(doc["agent"], &unknown);
      for (const auto& k : unknown) r.warn("ignoring unknown key agent." + k);
    } catch (const Error& e) {
      r.issue("agent", e.what());
    }
  }
  if (doc.contains("schedule")) {
    std::string s;
    r.get(doc, "schedule", "$", s);
    if (auto v = reward::parse_schedule(s)) c.schedule = *v;
    else r.issue("schedule", "expected S2D, D2S, OnlySparse or OnlyDense");
  }
  if (doc.contains("transitions")) {
    const auto& t = doc["transitions"];
    if (t.is_string()) c.transition_preset = t.get<std::string>();
    else r.u64_list(t, "transitions", c.transitions);
  }
  if (doc.contains("preset_n")) {
    std::uint64_t n = 0;
    r.get(doc, "preset_n", "$", n);
    c.preset_n = n;
  }
  auto unit = [&](const json& obj, const char* key, const std::string& path, reward::TimeUnit& out) {
    if (!obj.contains(key)) return;
    std::string u;
    r.get(obj, key, path, u);
    if (auto v = reward::parse_time_unit(u)) out = *v;
    else r.issue(path + "." + key, "expected episodes or env_steps");
  };
  unit(doc, "unit", "$", c.unit);
  c.budget.unit = c.unit;
  if (doc.contains("budget")) {
    const auto& b = doc["budget"];
    if (non_negative_integer(b)) {
      c.budget.total = b.get<std::uint64_t>();
    } else if (b.is_object()) {
      r.check_keys(b, "budget", {"unit", "total"});
      unit(b, "unit", "budget", c.budget.unit);
      r.get(b, "total", "budget", c.budget.total);
    } else {
      r.issue("budget", "expected a count or {unit, total}");
    }
  }
  r.get(doc, "gamma", "$", c.gamma);
  if (doc.contains("seeds")) r.u64_list(doc["seeds"], "seeds", c.seeds);
  if (doc.contains("cross_density")) {
    const auto& j = doc["cross_density"];
    const std::string p = "cross_density";
    if (!j.is_object()) {
      r.issue(p, "expected an object");
    } else {
      r.check_keys(j, p, {"enabled", "initial", "checkpoints", "grid", "batch_size", "run_to_budget"});
      auto& cd = c.cross_density;
      r.get(j, "enabled", p, cd.enabled);
      if (j.contains("initial")) {
        std::string d;
        r.get(j, "initial", p, d);
        if (auto v = reward::parse_density(d)) cd.initial = *v;
        else r.issue(p + ".initial", "expected sparse or dense");
      }
      if (j.contains("checkpoints")) r.u64_list(j["checkpoints"], p + ".checkpoints", cd.checkpoints);
      if (j.contains("grid")) {
        const auto& g = j["grid"];
        if (!g.is_object()) {
          r.issue(p + ".grid", "expected an object");
        } else {
          r.check_keys(g, p + ".grid", {"half_range", "steps"});
          r.get(g, "half_range", p + ".grid", cd.grid.half_range);
          r.get(g, "steps", p + ".grid", cd.grid.steps);
        }
      }
      r.get(j, "batch_size", p, cd.batch_size);
      r.get(j, "run_to_budget", p, cd.run_to_budget);
    }
  }
  if (doc.contains("sharpness")) {
    const auto& j = doc["sharpness"];
    if (!j.is_object()) {
      r.issue("sharpness", "expected an object");
    } else {
      r.check_keys(j, "sharpness", {"enabled", "rho", "p", "batch_size"});
      r.get(j, "enabled", "sharpness", c.sharpness.enabled);
      r.get(j, "rho", "sharpness", c.sharpness.cfg.rho);
      r.get(j, "p", "sharpness", c.sharpness.cfg.p);
      r.get(j, "batch_size", "sharpness", c.sharpness.cfg.batch_size);
    }
  }
  r.get(doc, "output_dir", "$", c.output_dir);
  r.get(doc, "threads", "$", c.threads);
  r.get(doc, "grid_threads", "$", c.grid_threads);
  r.get(doc, "save_snapshots", "$", c.save_snapshots);

  for (auto& i : r.issues)
    if (i.path.rfind("$.", 0) == 0) i.path.erase(0, 2);
  if (!r.issues.empty()) throw ConfigError(std::move(r.issues));
  validate(c, warnings);
  return c;
}

ExperimentConfig load_config(const std::string& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot read config " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError(std::vector<ConfigIssue>{{"$", std::string("not valid JSON: ") + e.what()}});
  }
  return config_from_json(doc, warnings);
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["version"] = kConfigVersion;
  j["run_id"] = c.run_id;
  j["env"] = env_to_json(c.env);
  j["algorithm"] = agents::to_string(c.algorithm);
  j["agent"] = agents::to_json(c.agent);
  j["schedule"] = reward::to_string(c.schedule);
  if (!c.transition_preset.empty()) j["transitions"] = c.transition_preset;
  else j["transitions"] = c.transitions;
  if (c.preset_n) j["preset_n"] = *c.preset_n;
  j["unit"] = reward::to_string(c.unit);
  j["budget"] = {{"unit", reward::to_string(c.budget.unit)}, {"total", c.budget.total}};
  j["gamma"] = c.gamma;
  j["seeds"] = c.seeds;
  const auto& cd = c.cross_density;
  j["cross_density"] = {{"enabled", cd.enabled},
                        {"initial", reward::to_string(cd.initial)},
                        {"checkpoints", cd.checkpoints},
                        {"grid", {{"half_range", cd.grid.half_range}, {"steps", cd.grid.steps}}},
                        {"batch_size", cd.batch_size},
                        {"run_to_budget", cd.run_to_budget}};
  j["sharpness"] = {{"enabled", c.sharpness.enabled},
                    {"rho", c.sharpness.cfg.rho},
                    {"p", c.sharpness.cfg.p},
                    {"batch_size", c.sharpness.cfg.batch_size}};
  j["output_dir"] = c.output_dir;
  j["threads"] = c.threads;
  j["grid_threads"] = c.grid_threads;
  j["save_snapshots"] = c.save_snapshots;
  return j;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  json j = to_json(cfg);
  j.erase("output_dir");
  j.erase("threads");
  j.erase("grid_threads");
  j.erase("save_snapshots");
  j["resolved_transitions"] = resolved_transitions(cfg);
  return fnv1a(j.dump());
}

}  // namespace s2d::harness
