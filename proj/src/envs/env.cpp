#include "envs/env.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <string>

#include "common/error.hpp"
#include "common/seeding.hpp"

namespace s2d::env {

namespace {

constexpr std::uint64_t kResetStream = 0x7265736574ULL;

std::string cell_str(Cell c) { return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + ")"; }

bool in_bounds(const GridworldSpec& s, Cell c) { return c.x >= 0 && c.y >= 0 && c.x < s.width && c.y < s.height; }

double norm_coord(int v, int extent) { return extent > 1 ? static_cast<double>(v) / (extent - 1) : 0.0; }

Eigen::Vector2d as_vec(Cell c) { return {static_cast<double>(c.x), static_cast<double>(c.y)}; }

std::set<Cell> reachable_from(const GridworldSpec& s, Cell start) {
  std::set<Cell> seen{start};
  std::queue<Cell> frontier;
  frontier.push(start);
  while (!frontier.empty()) {
    Cell c = frontier.front();
    frontier.pop();
    for (int a = 0; a < kNumGridActions; ++a) {
      Cell n = move(s, c, a);
      if (seen.insert(n).second) frontier.push(n);
    }
  }
  return seen;
}

}  // namespace

GridworldSpec GridworldSpec::fixed_goal_4x4() { return {}; }

GridworldSpec GridworldSpec::random_goal_10x10() {
  GridworldSpec s;
  s.width = 10;
  s.height = 10;
  s.goal_mode = GoalMode::RandomPerEpisode;
  return s;
}

bool is_wall(const GridworldSpec& spec, Cell c) {
  return std::find(spec.walls.begin(), spec.walls.end(), c) != spec.walls.end();
}

Cell move(const GridworldSpec& spec, Cell from, int action) {
  Cell to = from;
  switch (action) {
    case kUp: --to.y; break;
    case kDown: ++to.y; break;
    case kLeft: --to.x; break;
    case kRight: ++to.x; break;
    default: fail(ErrorCode::Precondition, "gridworld action must be in 0..3, got " + std::to_string(action));
  }
  if (!in_bounds(spec, to) || is_wall(spec, to)) return from;
  return to;
}

std::vector<Cell> candidate_goals(const GridworldSpec& spec) {
  std::vector<Cell> out;
  for (int y = 0; y < spec.height; ++y)
    for (int x = 0; x < spec.width; ++x) {
      Cell c{x, y};
      if (c != spec.start && !is_wall(spec, c)) out.push_back(c);
    }
  return out;
}

void validate(const GridworldSpec& s) {
  require(s.width > 0 && s.height > 0, ErrorCode::InvalidSpec, "gridworld width and height must be positive");
  require(s.max_steps > 0, ErrorCode::InvalidSpec, "max_steps must be positive");
  require(in_bounds(s, s.start), ErrorCode::InvalidSpec, "start " + cell_str(s.start) + " is outside the grid");
  require(!is_wall(s, s.start), ErrorCode::InvalidSpec, "start " + cell_str(s.start) + " is a wall");
  for (Cell w : s.walls)
    require(in_bounds(s, w), ErrorCode::InvalidSpec, "wall " + cell_str(w) + " is outside the grid");
  auto reach = reachable_from(s, s.start);
  if (s.goal_mode == GoalMode::Fixed) {
    require(in_bounds(s, s.goal) && !is_wall(s, s.goal), ErrorCode::InvalidSpec,
            "goal " + cell_str(s.goal) + " must be an in-bounds non-wall cell");
    require(s.goal != s.start, ErrorCode::InvalidSpec, "goal coincides with start");
    require(reach.count(s.goal) == 1, ErrorCode::InvalidSpec, "goal " + cell_str(s.goal) + " is unreachable");
  } else {
    auto cands = candidate_goals(s);
    require(!cands.empty(), ErrorCode::InvalidSpec, "random-goal gridworld has no candidate goal cells");
    for (Cell c : cands)
      require(reach.count(c) == 1, ErrorCode::InvalidSpec, "candidate goal " + cell_str(c) + " is unreachable");
  }
}

void validate(const PointReacherSpec& s) {
  require(s.action_bound > 0 && s.success_radius > 0 && s.max_steps > 0, ErrorCode::InvalidSpec,
          "point reacher bounds, radius and max_steps must be positive");
  require(s.min_start_goal_distance >= 0 && s.min_start_goal_distance < std::sqrt(2.0) * 0.9, ErrorCode::InvalidSpec,
          "min_start_goal_distance must leave room to sample goals");
}

void validate(const EnvSpec& spec) {
  std::visit([](const auto& s) { validate(s); }, spec);
}

double diameter(const EnvSpec& spec) {
  if (std::holds_alternative<PointReacherSpec>(spec)) return std::sqrt(2.0);
  std::vector<Cell> cells;
  for (const auto& e : enumerate_states(spec)) cells.push_back(e.cell);
  double best = 0.0;
  for (std::size_t i = 0; i < cells.size(); ++i)
    for (std::size_t j = i + 1; j < cells.size(); ++j)
      best = std::max(best, (as_vec(cells[i]) - as_vec(cells[j])).norm());
  return best;
}

std::vector<StateEntry> enumerate_states(const EnvSpec& spec) {
  require(std::holds_alternative<GridworldSpec>(spec), ErrorCode::Unsupported,
          "state enumeration is only defined for gridworlds");
  const auto& s = std::get<GridworldSpec>(spec);
  std::vector<StateEntry> out;
  for (int y = 0; y < s.height; ++y)
    for (int x = 0; x < s.width; ++x) {
      Cell c{x, y};
      if (!is_wall(s, c)) out.push_back({c, {kUp, kDown, kLeft, kRight}});
    }
  return out;
}

// ---------------------------------------------------------------------------

Gridworld::Gridworld(GridworldSpec spec) : spec_(std::move(spec)) {
  validate(spec_);
  candidates_ = candidate_goals(spec_);
  agent_ = spec_.start;
  goal_ = spec_.goal;
}

Eigen::VectorXd Gridworld::observation() const {
  Eigen::VectorXd obs(4);
  obs << norm_coord(agent_.x, spec_.width), norm_coord(agent_.y, spec_.height), norm_coord(goal_.x, spec_.width),
      norm_coord(goal_.y, spec_.height);
  return obs;
}

Eigen::VectorXd Gridworld::reset(std::uint64_t seed, std::uint64_t episode) {
  agent_ = spec_.start;
  steps_ = 0;
  done_ = false;
  if (spec_.goal_mode == GoalMode::Fixed) {
    goal_ = spec_.goal;
  } else {
    std::mt19937_64 rng(derive_seed({kResetStream, seed, episode}));
    std::uniform_int_distribution<std::size_t> pick(0, candidates_.size() - 1);
    goal_ = candidates_[pick(rng)];
  }
  return observation();
}

StepOutcome Gridworld::step(int action) {
  require(!done_, ErrorCode::ContractViolation, "step called on a finished gridworld episode");
  agent_ = move(spec_, agent_, action);
  ++steps_;
  StepOutcome out;
  out.info.success = agent_ == goal_;
  out.base_reward = spec_.living_penalty + (out.info.success ? spec_.success_reward : 0.0);
  done_ = out.info.success || steps_ >= spec_.max_steps;
  out.done = done_;
  out.next_obs = observation();
  out.info.agent_pos = as_vec(agent_);
  out.info.goal_pos = as_vec(goal_);
  out.info.step_index = steps_;
  return out;
}

// ---------------------------------------------------------------------------

PointReacher::PointReacher(PointReacherSpec spec) : spec_(spec) { validate(spec_); }

Eigen::VectorXd PointReacher::observation() const {
  Eigen::VectorXd obs(4);
  obs << agent_, goal_;
  return obs;
}

Eigen::VectorXd PointReacher::reset(std::uint64_t seed, std::uint64_t episode) {
  std::mt19937_64 rng(derive_seed({kResetStream, seed, episode}));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  do {
    agent_ = {u(rng), u(rng)};
    goal_ = {u(rng), u(rng)};
  } while ((agent_ - goal_).norm() <= spec_.min_start_goal_distance);
  steps_ = 0;
  done_ = false;
  return observation();
}

StepOutcome PointReacher::step(const Eigen::Vector2d& action) {
  require(!done_, ErrorCode::ContractViolation, "step called on a finished point-reacher episode");
  require(action.allFinite(), ErrorCode::Numeric, "non-finite point-reacher action");
  Eigen::Vector2d delta = action.cwiseMax(-spec_.action_bound).cwiseMin(spec_.action_bound);
  agent_ = (agent_ + delta).cwiseMax(0.0).cwiseMin(1.0);
  ++steps_;
  StepOutcome out;
  out.info.success = (agent_ - goal_).norm() < spec_.success_radius;
  out.base_reward = spec_.time_penalty + (out.info.success ? spec_.success_reward : 0.0);
  done_ = out.info.success || steps_ >= spec_.max_steps;
  out.done = done_;
  out.next_obs = observation();
  out.info.agent_pos = agent_;
  out.info.goal_pos = goal_;
  out.info.step_index = steps_;
  return out;
}

// ---------------------------------------------------------------------------

namespace {
std::variant<Gridworld, PointReacher> make_impl(const EnvSpec& spec) {
  if (const auto* g = std::get_if<GridworldSpec>(&spec)) return Gridworld(*g);
  return PointReacher(std::get<PointReacherSpec>(spec));
}
}  // namespace

Environment::Environment(const EnvSpec& spec) : spec_(spec), impl_(make_impl(spec)) {}

Eigen::VectorXd Environment::reset(std::uint64_t seed, std::uint64_t episode) {
  return std::visit([&](auto& e) { return e.reset(seed, episode); }, impl_);
}

StepOutcome Environment::step(const Eigen::VectorXd& action) {
  if (auto* g = std::get_if<Gridworld>(&impl_)) {
    require(action.size() == 1, ErrorCode::DimensionMismatch, "gridworld expects a single action index");
    return g->step(static_cast<int>(std::lround(action[0])));
  }
  require(action.size() == 2, ErrorCode::DimensionMismatch, "point reacher expects a 2-D action");
  return std::get<PointReacher>(impl_).step(Eigen::Vector2d(action[0], action[1]));
}

bool Environment::discrete() const noexcept { return std::holds_alternative<Gridworld>(impl_); }

std::size_t Environment::action_size() const noexcept { return discrete() ? kNumGridActions : 2; }

int Environment::max_steps() const noexcept {
  return std::visit([](const auto& e) { return e.spec().max_steps; }, impl_);
}

Eigen::Vector2d Environment::agent_position() const {
  if (const auto* g = std::get_if<Gridworld>(&impl_)) return as_vec(g->agent());
  return std::get<PointReacher>(impl_).agent();
}

Eigen::Vector2d Environment::goal_position() const {
  if (const auto* g = std::get_if<Gridworld>(&impl_)) return as_vec(g->goal());
  return std::get<PointReacher>(impl_).goal();
}

}  // namespace s2d::env
