#include <cmath>
#include <map>
#include <set>

#include <boost/math/distributions/chi_squared.hpp>

#include "doctest.h"
#include "envs/env.hpp"
#include "support.hpp"

using namespace s2d;
using namespace s2d::env;
using s2d::test::error_code_of;

namespace {

Eigen::VectorXd act(int a) { return Eigen::VectorXd::Constant(1, a); }

}  // namespace

TEST_CASE("fixed 4x4 reset encodes start and goal") {
  Environment e(GridworldSpec::fixed_goal_4x4());
  for (std::uint64_t seed : {0u, 9u}) {
    auto obs = e.reset(seed, 3);
    CHECK(obs[0] == 0.0);
    CHECK(obs[1] == 0.0);
    CHECK(obs[2] == 1.0);
    CHECK(obs[3] == 1.0);
    CHECK(e.goal_position() == Eigen::Vector2d(3, 3));
  }
}

TEST_CASE("reset is a function of seed and episode") {
  Environment e(GridworldSpec::random_goal_10x10());
  auto a = e.reset(5, 17);
  auto b = e.reset(5, 17);
  CHECK(a == b);
  bool differs = false;
  for (std::uint64_t ep = 0; ep < 20 && !differs; ++ep) differs = e.reset(5, ep) != a;
  CHECK(differs);

  Environment r(PointReacherSpec{});
  CHECK(r.reset(1, 2) == r.reset(1, 2));
  for (std::uint64_t ep = 0; ep < 200; ++ep) {
    r.reset(3, ep);
    CHECK((r.agent_position() - r.goal_position()).norm() > 0.2);
  }
}

TEST_CASE("random 10x10 goals are uniform over non-start cells") {
  const auto spec = GridworldSpec::random_goal_10x10();
  Gridworld g(spec);
  const auto cands = candidate_goals(spec);
  std::set<Cell> allowed(cands.begin(), cands.end());
  std::size_t expected_cells = 0;
  for (int y = 0; y < spec.height; ++y)
    for (int x = 0; x < spec.width; ++x)
      if (Cell{x, y} != spec.start && !is_wall(spec, {x, y})) ++expected_cells;
  CHECK(cands.size() == expected_cells);

  std::map<Cell, int> counts;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    g.reset(11, static_cast<std::uint64_t>(i));
    CHECK(allowed.count(g.goal()) == 1);
    ++counts[g.goal()];
  }
  const double expect = static_cast<double>(n) / static_cast<double>(cands.size());
  double chi2 = 0.0;
  for (const auto& c : cands) {
    const double d = counts[c] - expect;
    chi2 += d * d / expect;
  }
  boost::math::chi_squared dist(static_cast<double>(cands.size() - 1));
  const double p = boost::math::cdf(boost::math::complement(dist, chi2));
  MESSAGE("chi2 = " << chi2 << ", p = " << p);
  CHECK(p > 0.01);
}

TEST_CASE("gridworld step rules") {
  Environment e(GridworldSpec::fixed_goal_4x4());
  e.reset(0, 0);
  auto out = e.step(act(kUp));
  CHECK(e.agent_position() == Eigen::Vector2d(0, 0));
  CHECK(out.base_reward == doctest::Approx(-0.1));
  CHECK_FALSE(out.done);
  out = e.step(act(kLeft));
  CHECK(e.agent_position() == Eigen::Vector2d(0, 0));

  for (int a : {kRight, kRight, kRight, kDown, kDown}) {
    out = e.step(act(a));
    CHECK_FALSE(out.done);
  }
  CHECK(e.agent_position() == Eigen::Vector2d(3, 2));
  out = e.step(act(kDown));
  CHECK(out.base_reward == doctest::Approx(0.9));
  CHECK(out.done);
  CHECK(out.info.success);
  CHECK(error_code_of([&] { e.step(act(kUp)); }) == ErrorCode::ContractViolation);
}

TEST_CASE("gridworld timeout") {
  auto spec = GridworldSpec::fixed_goal_4x4();
  Environment e(spec);
  e.reset(0, 0);
  for (int k = 1; k < spec.max_steps; ++k) CHECK_FALSE(e.step(act(kUp)).done);
  auto out = e.step(act(kUp));
  CHECK(out.done);
  CHECK(out.info.step_index == spec.max_steps);
  CHECK(out.base_reward == doctest::Approx(-0.1));
  CHECK_FALSE(out.info.success);
}

TEST_CASE("walls block moves and closure holds") {
  GridworldSpec spec = GridworldSpec::fixed_goal_4x4();
  spec.walls = {{1, 0}, {1, 1}, {2, 2}};
  validate(spec);
  CHECK(enumerate_states(spec).size() == 13);
  CHECK(enumerate_states(GridworldSpec::fixed_goal_4x4()).size() == 16);
  CHECK(move(spec, {0, 0}, kRight) == Cell{0, 0});
  CHECK(move(spec, {0, 0}, kDown) == Cell{0, 1});

  std::set<Cell> states;
  for (const auto& s : enumerate_states(spec)) states.insert(s.cell);
  for (const auto& s : enumerate_states(spec))
    for (int a = 0; a < kNumGridActions; ++a) CHECK(states.count(move(spec, s.cell, a)) == 1);

  Environment e(spec);
  std::mt19937_64 rng(1);
  for (int ep = 0; ep < 20; ++ep) {
    e.reset(0, static_cast<std::uint64_t>(ep));
    bool done = false;
    while (!done) {
      auto out = e.step(act(static_cast<int>(rng() % 4)));
      const bool plain = std::abs(out.base_reward + 0.1) < 1e-12;
      const bool win = std::abs(out.base_reward - 0.9) < 1e-12;
      CHECK((plain || win));
      if (out.info.success) CHECK(out.done);
      Cell c{static_cast<int>(out.info.agent_pos.x()), static_cast<int>(out.info.agent_pos.y())};
      CHECK(states.count(c) == 1);
      done = out.done;
    }
  }

  spec.walls.push_back({0, 0});
  CHECK(error_code_of([&] { validate(spec); }) == ErrorCode::InvalidSpec);
}

TEST_CASE("episodes replay bit for bit") {
  auto run = [] {
    Environment e(GridworldSpec::random_goal_10x10());
    std::vector<double> trace;
    e.reset(4, 8);
    for (int k = 0; k < 30; ++k) {
      auto out = e.step(act(k % 4));
      trace.push_back(out.base_reward);
      for (int i = 0; i < 4; ++i) trace.push_back(out.next_obs[i]);
      if (out.done) break;
    }
    return trace;
  };
  CHECK(run() == run());
}

TEST_CASE("point reacher clips actions and bounds") {
  Environment e(PointReacherSpec{});
  e.reset(0, 0);
  const Eigen::Vector2d start = e.agent_position();
  Eigen::VectorXd big(2);
  big << 5.0, -5.0;
  auto out = e.step(big);
  Eigen::Vector2d expect = (start + Eigen::Vector2d(0.1, -0.1)).cwiseMax(0.0).cwiseMin(1.0);
  CHECK((e.agent_position() - expect).norm() < 1e-15);
  CHECK(out.base_reward == doctest::Approx(out.info.success ? 0.99 : -0.01));
  CHECK(error_code_of([&] { e.step(Eigen::VectorXd::Zero(3)); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("diameter") {
  CHECK(diameter(GridworldSpec::fixed_goal_4x4()) == doctest::Approx(std::sqrt(18.0)).epsilon(1e-12));
  GridworldSpec one;
  one.width = 1;
  one.height = 1;
  one.goal_mode = GoalMode::RandomPerEpisode;
  CHECK(diameter(EnvSpec(one)) == 0.0);
  CHECK(diameter(PointReacherSpec{}) == doctest::Approx(std::sqrt(2.0)));
  CHECK(error_code_of([] { enumerate_states(PointReacherSpec{}); }) == ErrorCode::Unsupported);
}
