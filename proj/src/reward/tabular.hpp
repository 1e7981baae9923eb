#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "envs/env.hpp"
#include "json.hpp"
#include "reward/curriculum.hpp"

namespace s2d::reward {

using env::Cell;

/// Enumerated gridworld with one fixed goal. The goal is absorbing: every action
/// from it returns to it.
struct TabularMdp {
  env::GridworldSpec spec;
  Cell goal;
  std::vector<Cell> states;            // row-major, walls excluded
  std::vector<std::array<int, 4>> next;  // successor state index per action
  int goal_index = -1;

  int num_states() const noexcept { return static_cast<int>(states.size()); }
  int index_of(Cell c) const;
};

/// `goal` defaults to the gridworld's fixed goal; random-goal specs must pass one.
TabularMdp make_tabular(const env::EnvSpec& spec, std::optional<Cell> goal = std::nullopt);

using RewardFn = std::function<double(Cell s, int action, Cell s_next)>;

RewardFn zero_reward();
/// Success reward on entering the goal, plus the living penalty on every
/// non-absorbing step when `with_living_penalty`. Zero inside the absorbing goal.
RewardFn sparse_reward(const TabularMdp& mdp, bool with_living_penalty);
/// gamma * psi(s') - psi(s) on every transition, including the absorbing self-loop.
RewardFn shaping_reward(const PotentialSpec& pot, double gamma);
/// +bonus whenever the transition enters `cell`.
RewardFn cell_bonus(Cell cell, double bonus);
RewardFn operator+(RewardFn a, RewardFn b);

PotentialSpec grid_potential(const TabularMdp& mdp);

/// supp(R) = { s | exists a: R(s, a) != 0 }, row-major.
std::vector<Cell> support(const TabularMdp& mdp, const RewardFn& r);
/// Throws Unsupported for continuous environments.
std::vector<Cell> support(const env::EnvSpec& spec, const RewardFn& r);

struct QTable {
  Eigen::MatrixXd q;  // states x actions
  Eigen::VectorXd v;
  std::vector<std::vector<int>> greedy;  // argmax actions per state, tie tolerance kGreedyTieTol
  double residual = 0.0;                 // final sup-norm Bellman residual
  int iterations = 0;
};

inline constexpr double kGreedyTieTol = 1e-9;

/// Value iteration until ||V - V*||_inf <= tol is guaranteed (residual * gamma / (1 - gamma) <= tol),
/// which also bounds the Bellman residual by tol. Requires gamma < 1 and tol > 0.
QTable value_iteration(const TabularMdp& mdp, const RewardFn& r, double gamma, double tol);

struct StageReward {
  std::string name;
  RewardFn reward;
  // Component used for the support-inclusion check; defaults to `reward` when empty.
  RewardFn support_reward;
  // Set when `reward` equals stage 1's reward plus shaping with this potential.
  std::optional<PotentialSpec> shaping_potential;
};

struct StageEvidence {
  std::string name;
  std::vector<Cell> support;
  double sparsity = 0.0;  // |supp| / |S|
  std::vector<std::vector<int>> greedy;
};

struct S2dCertificate {
  bool supports_nested = false;  // supp(R_1) subset of ... subset of supp(R_N)
  bool policies_nested = false;  // optimal policy sets nested Pi_1 >= ... >= Pi_N
  double q_shift_max_residual = 0.0;  // max |Q_i - Q_1 + Phi(s)| over shaped stages
  bool q_shift_ok = true;
  double q_shift_tolerance = 0.0;
  std::string support_component;
  std::vector<StageEvidence> stages;
  std::vector<std::string> violations;
};

S2dCertificate check_s2d_conditions(const TabularMdp& mdp, const std::vector<StageReward>& stages, double gamma,
                                    double tol);

/// The shipped pair: sparse with living penalty, then sparse plus potential-based shaping.
/// Support checks use the success-only component of each stage.
std::vector<StageReward> pbrs_stage_pair(const TabularMdp& mdp, double gamma);

nlohmann::json to_json(const S2dCertificate& cert);

}  // namespace s2d::reward
