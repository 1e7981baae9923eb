#pragma once

#include <compare>
#include <cstdint>
#include <random>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace s2d::env {

struct Cell {
  int x = 0;
  int y = 0;
  auto operator<=>(const Cell&) const = default;
};

enum class GoalMode { Fixed, RandomPerEpisode };

// Up decreases y, Down increases y; (0,0) is the top-left cell.
enum GridAction : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };
inline constexpr int kNumGridActions = 4;

struct GridworldSpec {
  int width = 4;
  int height = 4;
  Cell start{0, 0};
  GoalMode goal_mode = GoalMode::Fixed;
  Cell goal{3, 3};  // used when goal_mode == Fixed
  std::vector<Cell> walls;
  double living_penalty = -0.1;
  double success_reward = 1.0;
  int max_steps = 50;

  static GridworldSpec fixed_goal_4x4();
  static GridworldSpec random_goal_10x10();
};

struct PointReacherSpec {
  double action_bound = 0.1;
  double success_radius = 0.02;
  double time_penalty = -0.01;
  double success_reward = 1.0;
  int max_steps = 50;
  double min_start_goal_distance = 0.2;
};

using EnvSpec = std::variant<GridworldSpec, PointReacherSpec>;

struct StepInfo {
  Eigen::Vector2d agent_pos = Eigen::Vector2d::Zero();
  Eigen::Vector2d goal_pos = Eigen::Vector2d::Zero();
  int step_index = 0;
  bool success = false;
};

struct StepOutcome {
  Eigen::VectorXd next_obs;
  double base_reward = 0.0;
  bool done = false;
  StepInfo info;
};

/// Throws InvalidSpec when a gridworld violates its invariants (start on a wall,
/// unreachable candidate goals, degenerate sizes).
void validate(const GridworldSpec& spec);
void validate(const PointReacherSpec& spec);
void validate(const EnvSpec& spec);

bool is_wall(const GridworldSpec& spec, Cell c);
/// Deterministic grid transition: blocked moves (walls, borders) leave the agent in place.
Cell move(const GridworldSpec& spec, Cell from, int action);
/// Cells a random-goal episode may draw from: every non-wall cell except the start, row-major.
std::vector<Cell> candidate_goals(const GridworldSpec& spec);

/// Max pairwise L2 distance over reachable positions, in the environment's native coordinates.
double diameter(const EnvSpec& spec);

struct StateEntry {
  Cell cell;
  std::vector<int> actions;
};
/// All non-wall cells in row-major order. Throws Unsupported for continuous environments.
std::vector<StateEntry> enumerate_states(const EnvSpec& spec);

class Gridworld {
 public:
  explicit Gridworld(GridworldSpec spec);

  Eigen::VectorXd reset(std::uint64_t seed, std::uint64_t episode);
  StepOutcome step(int action);

  const GridworldSpec& spec() const noexcept { return spec_; }
  Cell agent() const noexcept { return agent_; }
  Cell goal() const noexcept { return goal_; }
  bool done() const noexcept { return done_; }
  int step_index() const noexcept { return steps_; }
  Eigen::VectorXd observation() const;

 private:
  GridworldSpec spec_;
  std::vector<Cell> candidates_;
  Cell agent_;
  Cell goal_;
  int steps_ = 0;
  bool done_ = true;
};

class PointReacher {
 public:
  explicit PointReacher(PointReacherSpec spec);

  Eigen::VectorXd reset(std::uint64_t seed, std::uint64_t episode);
  StepOutcome step(const Eigen::Vector2d& action);

  const PointReacherSpec& spec() const noexcept { return spec_; }
  const Eigen::Vector2d& agent() const noexcept { return agent_; }
  const Eigen::Vector2d& goal() const noexcept { return goal_; }
  bool done() const noexcept { return done_; }
  Eigen::VectorXd observation() const;

 private:
  PointReacherSpec spec_;
  Eigen::Vector2d agent_ = Eigen::Vector2d::Zero();
  Eigen::Vector2d goal_ = Eigen::Vector2d::Zero();
  int steps_ = 0;
  bool done_ = true;
};

/// Uniform front end over both environments. Discrete actions are passed as a
/// one-element vector holding the action index.
class Environment {
 public:
  explicit Environment(const EnvSpec& spec);

  Eigen::VectorXd reset(std::uint64_t seed, std::uint64_t episode);
  StepOutcome step(const Eigen::VectorXd& action);

  bool discrete() const noexcept;
  std::size_t obs_dim() const noexcept { return 4; }
  // Number of discrete actions, or the continuous action dimension.
  std::size_t action_size() const noexcept;
  int max_steps() const noexcept;

  Eigen::Vector2d agent_position() const;
  Eigen::Vector2d goal_position() const;
  const EnvSpec& spec() const noexcept { return spec_; }

 private:
  EnvSpec spec_;
  std::variant<Gridworld, PointReacher> impl_;
};

}  // namespace s2d::env
