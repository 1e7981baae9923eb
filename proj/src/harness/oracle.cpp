#include "harness/oracle.hpp"

#include <algorithm>

#include "common/error.hpp"
#include "reward/tabular.hpp"

namespace s2d::harness {

nlohmann::json check_pbrs(const env::EnvSpec& spec, double gamma, double tol) {
  env::validate(spec);
  const auto* grid = std::get_if<env::GridworldSpec>(&spec);
  require(grid != nullptr, ErrorCode::Unsupported, "the tabular oracle needs a gridworld");
  std::vector<env::Cell> goals;
  if (grid->goal_mode == env::GoalMode::Fixed) goals.push_back(grid->goal);
  else goals = env::candidate_goals(*grid);

  nlohmann::json out;
  out["gamma"] = gamma;
  out["tol"] = tol;
  out["goals"] = nlohmann::json::array();
  bool supports = true, policies = true, shift = true;
  double worst = 0.0;
  for (auto g : goals) {
    auto mdp = reward::make_tabular(spec, g);
    auto cert = reward::check_s2d_conditions(mdp, reward::pbrs_stage_pair(mdp, gamma), gamma, tol);
    supports = supports && cert.supports_nested;
    policies = policies && cert.policies_nested;
    shift = shift && cert.q_shift_ok;
    worst = std::max(worst, cert.q_shift_max_residual);
    auto c = reward::to_json(cert);
    c["goal"] = {g.x, g.y};
    out["goals"].push_back(std::move(c));
  }
  out["supports_nested"] = supports;
  out["policies_nested"] = policies;
  out["q_shift_ok"] = shift;
  out["q_shift_max_residual"] = worst;
  out["ok"] = supports && policies && shift;
  return out;
}

}  // namespace s2d::harness
