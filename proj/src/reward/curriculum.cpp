#include "reward/curriculum.hpp"

#include <algorithm>

#include "common/error.hpp"

namespace s2d::reward {

std::string to_string(Schedule s) {
  switch (s) {
    case Schedule::S2D: return "S2D";
    case Schedule::D2S: return "D2S";
    case Schedule::OnlySparse: return "OnlySparse";
    case Schedule::OnlyDense: return "OnlyDense";
  }
  return "?";
}

std::string to_string(TimeUnit u) { return u == TimeUnit::Episodes ? "episodes" : "env_steps"; }

std::string to_string(Density d) { return d == Density::Sparse ? "sparse" : "dense"; }

std::optional<Schedule> parse_schedule(const std::string& s) {
  for (auto v : {Schedule::S2D, Schedule::D2S, Schedule::OnlySparse, Schedule::OnlyDense})
    if (to_string(v) == s) return v;
  return std::nullopt;
}

std::optional<TimeUnit> parse_time_unit(const std::string& s) {
  if (s == "episodes") return TimeUnit::Episodes;
  if (s == "env_steps" || s == "steps") return TimeUnit::EnvSteps;
  return std::nullopt;
}

std::optional<Density> parse_density(const std::string& s) {
  if (s == "sparse") return Density::Sparse;
  if (s == "dense") return Density::Dense;
  return std::nullopt;
}

void validate(const CurriculumSpec& spec) {
  require(spec.gamma > 0.0 && spec.gamma <= 1.0, ErrorCode::InvalidSpec, "gamma must be in (0, 1]");
  std::uint64_t prev = 0;
  for (auto t : spec.transitions) {
    require(t > prev, ErrorCode::InvalidSpec, "transition times must be positive and strictly increasing");
    prev = t;
  }
}

int stage_index(std::uint64_t t, const CurriculumSpec& spec) {
  auto it = std::upper_bound(spec.transitions.begin(), spec.transitions.end(), t);
  return static_cast<int>(it - spec.transitions.begin()) + 1;
}

bool dense_stage(Schedule schedule, int stage) noexcept {
  switch (schedule) {
    case Schedule::S2D: return stage > 1;
    case Schedule::D2S: return stage == 1;
    case Schedule::OnlySparse: return false;
    case Schedule::OnlyDense: return true;
  }
  return false;
}

double potential(const Eigen::Vector2d& s, const PotentialSpec& pot) { return pot.diam - (s - pot.goal).norm(); }

double shaping(const Eigen::Vector2d& s, const Eigen::Vector2d& s_next, double gamma, const PotentialSpec& pot) {
  return gamma * potential(s_next, pot) - potential(s, pot);
}

double schedule_reward(const CurriculumSpec& spec, const PotentialSpec& pot, std::uint64_t t, double base_r,
                       const Eigen::Vector2d& s, const Eigen::Vector2d& s_next) {
  if (!dense_stage(spec.schedule, stage_index(t, spec))) return base_r;
  return base_r + shaping(s, s_next, spec.gamma, pot);
}

}  // namespace s2d::reward
