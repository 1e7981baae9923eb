#include "reward/tabular.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"

namespace s2d::reward {

namespace {

Eigen::Vector2d pos(Cell c) { return {static_cast<double>(c.x), static_cast<double>(c.y)}; }

bool subset(const std::vector<int>& a, const std::vector<int>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

bool subset(const std::vector<Cell>& a, const std::vector<Cell>& b) {
  std::vector<Cell> sa = a, sb = b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  return std::includes(sb.begin(), sb.end(), sa.begin(), sa.end());
}

}  // namespace

int TabularMdp::index_of(Cell c) const {
  auto it = std::find(states.begin(), states.end(), c);
  require(it != states.end(), ErrorCode::Precondition, "cell is not a state of this MDP");
  return static_cast<int>(it - states.begin());
}

TabularMdp make_tabular(const env::EnvSpec& spec, std::optional<Cell> goal) {
  auto entries = env::enumerate_states(spec);
  const auto& grid = std::get<env::GridworldSpec>(spec);
  TabularMdp mdp;
  mdp.spec = grid;
  if (goal) {
    mdp.goal = *goal;
  } else {
    require(grid.goal_mode == env::GoalMode::Fixed, ErrorCode::Precondition,
            "random-goal gridworlds need an explicit goal for tabular analysis");
    mdp.goal = grid.goal;
  }
  for (const auto& e : entries) mdp.states.push_back(e.cell);
  mdp.goal_index = mdp.index_of(mdp.goal);
  for (int s = 0; s < mdp.num_states(); ++s) {
    std::array<int, 4> succ{};
    for (int a = 0; a < env::kNumGridActions; ++a) {
      succ[a] = (s == mdp.goal_index) ? s : mdp.index_of(env::move(grid, mdp.states[s], a));
    }
    mdp.next.push_back(succ);
  }
  return mdp;
}

RewardFn zero_reward() {
  return [](Cell, int, Cell) { return 0.0; };
}

RewardFn sparse_reward(const TabularMdp& mdp, bool with_living_penalty) {
  Cell goal = mdp.goal;
  double living = with_living_penalty ? mdp.spec.living_penalty : 0.0;
  double success = mdp.spec.success_reward;
  return [=](Cell s, int, Cell s_next) {
    if (s == goal) return 0.0;
    return living + (s_next == goal ? success : 0.0);
  };
}

RewardFn shaping_reward(const PotentialSpec& pot, double gamma) {
  return [=](Cell s, int, Cell s_next) { return shaping(pos(s), pos(s_next), gamma, pot); };
}

RewardFn cell_bonus(Cell cell, double bonus) {
  return [=](Cell, int, Cell s_next) { return s_next == cell ? bonus : 0.0; };
}

RewardFn operator+(RewardFn a, RewardFn b) {
  return [a = std::move(a), b = std::move(b)](Cell s, int act, Cell n) { return a(s, act, n) + b(s, act, n); };
}

PotentialSpec grid_potential(const TabularMdp& mdp) { return {env::diameter(mdp.spec), pos(mdp.goal)}; }

std::vector<Cell> support(const TabularMdp& mdp, const RewardFn& r) {
  std::vector<Cell> out;
  for (int s = 0; s < mdp.num_states(); ++s) {
    for (int a = 0; a < env::kNumGridActions; ++a) {
      if (r(mdp.states[s], a, mdp.states[mdp.next[s][a]]) != 0.0) {
        out.push_back(mdp.states[s]);
        break;
      }
    }
  }
  return out;
}

std::vector<Cell> support(const env::EnvSpec& spec, const RewardFn& r) {
  require(std::holds_alternative<env::GridworldSpec>(spec), ErrorCode::Unsupported,
          "support enumeration needs an enumerable environment");
  return support(make_tabular(spec), r);
}

QTable value_iteration(const TabularMdp& mdp, const RewardFn& r, double gamma, double tol) {
  require(gamma < 1.0, ErrorCode::Unsupported, "value-iteration oracle requires gamma < 1");
  require(gamma > 0.0 && tol > 0.0, ErrorCode::Precondition, "value iteration needs gamma > 0 and tol > 0");
  const int n = mdp.num_states();
  constexpr int A = env::kNumGridActions;
  Eigen::MatrixXd rewards(n, A);
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < A; ++a) rewards(s, a) = r(mdp.states[s], a, mdp.states[mdp.next[s][a]]);

  QTable out;
  out.q = Eigen::MatrixXd::Zero(n, A);
  out.v = Eigen::VectorXd::Zero(n);
  const double stop = tol * (1.0 - gamma) / gamma;
  constexpr int kMaxIterations = 10'000'000;
  for (int it = 1; it <= kMaxIterations; ++it) {
    for (int s = 0; s < n; ++s)
      for (int a = 0; a < A; ++a) out.q(s, a) = rewards(s, a) + gamma * out.v[mdp.next[s][a]];
    Eigen::VectorXd v_new = out.q.rowwise().maxCoeff();
    out.residual = (v_new - out.v).lpNorm<Eigen::Infinity>();
    out.v = v_new;
    out.iterations = it;
    require(std::isfinite(out.residual), ErrorCode::Numeric, "value iteration diverged");
    if (out.residual <= stop) break;
  }
  require(out.residual <= stop, ErrorCode::Numeric, "value iteration did not reach the requested tolerance");
  // Final Q consistent with the returned V.
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < A; ++a) out.q(s, a) = rewards(s, a) + gamma * out.v[mdp.next[s][a]];
  out.v = out.q.rowwise().maxCoeff();

  out.greedy.resize(n);
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < A; ++a)
      if (out.q(s, a) >= out.v[s] - kGreedyTieTol) out.greedy[s].push_back(a);
  return out;
}

S2dCertificate check_s2d_conditions(const TabularMdp& mdp, const std::vector<StageReward>& stages, double gamma,
                                    double tol) {
  require(stages.size() >= 2, ErrorCode::Precondition, "an S2D certificate needs at least two stages");
  S2dCertificate cert;
  cert.supports_nested = true;
  cert.policies_nested = true;
  cert.q_shift_tolerance = 10.0 * tol;

  std::vector<QTable> tables;
  for (const auto& st : stages) {
    StageEvidence ev;
    ev.name = st.name;
    ev.support = support(mdp, st.support_reward ? st.support_reward : st.reward);
    ev.sparsity = static_cast<double>(ev.support.size()) / mdp.num_states();
    tables.push_back(value_iteration(mdp, st.reward, gamma, tol));
    ev.greedy = tables.back().greedy;
    cert.stages.push_back(std::move(ev));
  }

  for (std::size_t i = 0; i + 1 < stages.size(); ++i) {
    if (!subset(cert.stages[i].support, cert.stages[i + 1].support)) {
      cert.supports_nested = false;
      cert.violations.push_back("supp(" + stages[i].name + ") is not contained in supp(" + stages[i + 1].name + ")");
    }
    for (int s = 0; s < mdp.num_states(); ++s) {
      if (!subset(tables[i + 1].greedy[s], tables[i].greedy[s])) {
        cert.policies_nested = false;
        cert.violations.push_back("optimal actions of " + stages[i + 1].name + " at (" +
                                  std::to_string(mdp.states[s].x) + "," + std::to_string(mdp.states[s].y) +
                                  ") are not optimal under " + stages[i].name);
      }
    }
  }

  for (std::size_t i = 1; i < stages.size(); ++i) {
    if (!stages[i].shaping_potential) continue;
    const auto& pot = *stages[i].shaping_potential;
    for (int s = 0; s < mdp.num_states(); ++s) {
      double phi = potential(pos(mdp.states[s]), pot);
      for (int a = 0; a < env::kNumGridActions; ++a) {
        double r = std::abs(tables[i].q(s, a) - tables[0].q(s, a) + phi);
        cert.q_shift_max_residual = std::max(cert.q_shift_max_residual, r);
      }
    }
  }
  cert.q_shift_ok = cert.q_shift_max_residual <= cert.q_shift_tolerance;

  bool custom_support = std::any_of(stages.begin(), stages.end(), [](const auto& s) { return bool(s.support_reward); });
  cert.support_component = custom_support ? "success-only component" : "full stage reward";
  return cert;
}

std::vector<StageReward> pbrs_stage_pair(const TabularMdp& mdp, double gamma) {
  PotentialSpec pot = grid_potential(mdp);
  StageReward sparse{"sparse", sparse_reward(mdp, true), sparse_reward(mdp, false), std::nullopt};
  StageReward dense{"sparse+pbrs", sparse_reward(mdp, true) + shaping_reward(pot, gamma),
                    sparse_reward(mdp, false) + shaping_reward(pot, gamma), pot};
  return {std::move(sparse), std::move(dense)};
}

nlohmann::json to_json(const S2dCertificate& cert) {
  nlohmann::json j;
  j["supports_nested"] = cert.supports_nested;
  j["policies_nested"] = cert.policies_nested;
  j["q_shift_max_residual"] = cert.q_shift_max_residual;
  j["q_shift_ok"] = cert.q_shift_ok;
  j["q_shift_tolerance"] = cert.q_shift_tolerance;
  j["support_component"] = cert.support_component;
  auto sizes = nlohmann::json::array();
  auto stages = nlohmann::json::array();
  for (const auto& st : cert.stages) {
    sizes.push_back(st.support.size());
    nlohmann::json s;
    s["name"] = st.name;
    s["sparsity"] = st.sparsity;
    auto cells = nlohmann::json::array();
    for (Cell c : st.support) cells.push_back({c.x, c.y});
    s["support"] = std::move(cells);
    stages.push_back(std::move(s));
  }
  j["supp_sizes"] = std::move(sizes);
  j["stages"] = std::move(stages);
  j["violations"] = cert.violations;
  return j;
}

}  // namespace s2d::reward
