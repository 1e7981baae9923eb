#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace s2d::reward {

enum class Schedule { S2D, D2S, OnlySparse, OnlyDense };
enum class TimeUnit { Episodes, EnvSteps };
enum class Density { Sparse, Dense };

std::string to_string(Schedule s);
std::string to_string(TimeUnit u);
std::string to_string(Density d);
std::optional<Schedule> parse_schedule(const std::string& s);
std::optional<TimeUnit> parse_time_unit(const std::string& s);
std::optional<Density> parse_density(const std::string& s);

/// Reward schedule plus stage-transition times T_1 < ... < T_{N-1} (T_0 = 0, T_N = inf).
struct CurriculumSpec {
  Schedule schedule = Schedule::S2D;
  std::vector<std::uint64_t> transitions;
  TimeUnit unit = TimeUnit::Episodes;
  double gamma = 0.99;

  int num_stages() const noexcept { return static_cast<int>(transitions.size()) + 1; }
};

/// Throws InvalidSpec unless transitions are strictly increasing and positive and gamma is in (0, 1].
void validate(const CurriculumSpec& spec);

/// 1-based stage i with t in [T_{i-1}, T_i).
int stage_index(std::uint64_t t, const CurriculumSpec& spec);

/// Whether stage `stage` of `schedule` adds the potential-based dense term.
bool dense_stage(Schedule schedule, int stage) noexcept;

/// psi(s) = diam - ||s - g||_2 over positions in the environment's native coordinates.
struct PotentialSpec {
  double diam = 0.0;
  Eigen::Vector2d goal = Eigen::Vector2d::Zero();
};

double potential(const Eigen::Vector2d& s, const PotentialSpec& pot);

/// F = gamma * psi(s_next) - psi(s) (deterministic transitions).
double shaping(const Eigen::Vector2d& s, const Eigen::Vector2d& s_next, double gamma, const PotentialSpec& pot);

/// base_r during sparse stages, base_r + F during dense stages.
double schedule_reward(const CurriculumSpec& spec, const PotentialSpec& pot, std::uint64_t t, double base_r,
                       const Eigen::Vector2d& s, const Eigen::Vector2d& s_next);

}  // namespace s2d::reward
