#include <cmath>
#include <limits>
#include <random>

#include "agents/algorithms.hpp"
#include "doctest.h"
#include "landscape/cross_density.hpp"
#include "landscape/landscape.hpp"
#include "support.hpp"

using namespace s2d;
using namespace s2d::landscape;
using s2d::test::error_code_of;

namespace {

// Straight transcription of the depth definition, kept deliberately naive.
double depth_oracle(const Eigen::MatrixXd& z) {
  std::vector<std::pair<int, int>> mins, maxs;
  for (int i = 1; i + 1 < z.rows(); ++i)
    for (int j = 1; j + 1 < z.cols(); ++j) {
      bool lo = true, hi = true;
      for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
          if (!di && !dj) continue;
          lo = lo && z(i, j) < z(i + di, j + dj);
          hi = hi && z(i, j) > z(i + di, j + dj);
        }
      if (lo) mins.emplace_back(i, j);
      if (hi) maxs.emplace_back(i, j);
    }
  if (mins.empty()) return 0.0;
  if (maxs.empty()) return z.maxCoeff() - z.minCoeff();
  double total = 0.0;
  for (auto [mi, mj] : mins) {
    double best = std::numeric_limits<double>::infinity();
    std::pair<int, int> pick;
    for (auto [xi, xj] : maxs) {  // row-major order, strict < keeps the first on ties
      const double d = std::hypot(double(mi - xi), double(mj - xj));
      if (d < best) {
        best = d;
        pick = {xi, xj};
      }
    }
    total += z(pick.first, pick.second) - z(mi, mj);
  }
  return total / static_cast<double>(mins.size());
}

agents::PolicyLossEvaluator trained_dqn(std::uint64_t seed) {
  agents::AgentConfig cfg;
  cfg.batch_size = 32;
  reward::CurriculumSpec c{reward::Schedule::OnlyDense, {}, reward::TimeUnit::Episodes, 0.99};
  agents::Trainer t(env::Environment(env::GridworldSpec::fixed_goal_4x4()),
                    agents::make_agent(agents::Algorithm::Dqn, cfg, 4, 4, seed), c,
                    agents::Budget{reward::TimeUnit::Episodes, 10}, seed);
  t.run();
  return agents::PolicyLossEvaluator(t.agent().snapshot(), t.agent().buffer().deterministic_batch(128), 1);
}

void check_pair(const nn::Network& net, const DirectionPair& d) {
  REQUIRE(d.x.size() == static_cast<Eigen::Index>(net.num_params()));
  CHECK(d.x.allFinite());
  CHECK(d.y.allFinite());
  for (std::size_t b = 0; b < net.num_blocks(); ++b) {
    auto r = net.block(b);
    const auto off = static_cast<Eigen::Index>(r.offset), len = static_cast<Eigen::Index>(r.size);
    const auto x = d.x.segment(off, len), y = d.y.segment(off, len);
    const double nt = net.block_values(b).norm();
    if (x.isZero() || nt == 0.0) {
      CHECK(x.isZero());
      CHECK(y.isZero());
      continue;
    }
    CHECK(std::abs(x.dot(y)) < 1e-6 * x.norm() * y.norm());
    CHECK(std::abs(x.norm() / nt - 1.0) < 1e-6);
    CHECK(std::abs(y.norm() / nt - 1.0) < 1e-6);
  }
}

}  // namespace

TEST_CASE("direction invariants across shapes") {
  for (auto dims : {std::vector<std::size_t>{4, 64, 64, 4}, std::vector<std::size_t>{6, 32, 1},
                    std::vector<std::size_t>{2, 3, 5, 7, 2}}) {
    for (std::uint64_t s = 0; s < 20; ++s) {
      auto net = nn::Network::mlp(dims, s);  // zero biases: zero-norm blocks
      check_pair(net, gen_perpendicular_directions(net, s));
      for (std::size_t l = 0; l < net.num_layers(); ++l) net.biases(l).setRandom();
      check_pair(net, gen_perpendicular_directions(net, s + 1000));
    }
  }
}

TEST_CASE("direction draws are frozen by seed and renormalized per network") {
  auto net = test::random_net({4, 16, 4}, 1);
  auto a = gen_perpendicular_directions(net, 7);
  CHECK(gen_perpendicular_directions(net, 7).x == a.x);
  CHECK_FALSE(gen_perpendicular_directions(net, 8).x == a.x);
  auto bigger = net;
  bigger.params() *= 3.0;
  auto c = draw_directions(net, 7).normalize(bigger);
  CHECK((c.x - 3.0 * a.x).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("grid axis") {
  auto ax = grid_axis(10, 50);
  CHECK(ax.size() == 50);
  CHECK(ax.front() == -10.0);
  CHECK(ax.back() == 10.0);
  CHECK(ax[25] == doctest::Approx(10.0 / 49.0));
  CHECK(grid_axis(10, 51)[25] == 0.0);
}

TEST_CASE("grid identities") {
  auto eval = trained_dqn(3);
  auto dirs = gen_perpendicular_directions(eval.base(), 5);
  const double base = eval(eval.base());

  auto flat = loss_grid(eval, dirs, GridSpec{0.0, 3}, 1);
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) CHECK(flat.z(i, j) == base);

  auto odd = loss_grid(eval, dirs, GridSpec{10.0, 7}, 1);
  CHECK(odd.z(3, 3) == base);

  auto serial = loss_grid(eval, dirs, GridSpec{10.0, 12}, 1);
  auto parallel = loss_grid(eval, dirs, GridSpec{10.0, 12}, 4);
  CHECK(serial.z == parallel.z);
  CHECK(loss_grid(eval, dirs, GridSpec{10.0, 12}, 1).z == serial.z);

  DirectionPair swapped{dirs.y, dirs.x, dirs.gen_seed};
  auto t = loss_grid(eval, swapped, GridSpec{10.0, 12}, 2);
  for (Eigen::Index i = 0; i < 12; ++i)
    for (Eigen::Index j = 0; j < 12; ++j)
      CHECK(t.z(j, i) == doctest::Approx(serial.z(i, j)).epsilon(1e-9));
}

TEST_CASE("non-finite cells reject the grid") {
  auto eval = trained_dqn(4);
  auto dirs = gen_perpendicular_directions(eval.base(), 5);
  CHECK(error_code_of([&] { loss_grid(eval, dirs, GridSpec{1e300, 3}, 2); }) == ErrorCode::GridRejected);
}

TEST_CASE("depth metric hand cases") {
  Eigen::MatrixXd z = Eigen::MatrixXd::Constant(5, 5, 3.0);
  z(1, 1) = 1.0;
  z(3, 3) = 5.0;
  CHECK(local_minima_depth(z) == 4.0);
  CHECK(local_minima_depth(Eigen::MatrixXd::Constant(6, 6, 2.5)) == 0.0);
  Eigen::MatrixXd plane(8, 8);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) plane(i, j) = 0.3 * i - 0.7 * j;
  CHECK(local_minima_depth(plane) == 0.0);
  Eigen::MatrixXd bowl(7, 7);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 7; ++j) bowl(i, j) = (i - 3) * (i - 3) + (j - 3) * (j - 3);
  CHECK(local_minima_depth(bowl) == 18.0);
}

TEST_CASE("depth metric matches the oracle and its invariances") {
  std::mt19937_64 rng(12);
  for (int k = 0; k < 40; ++k) {
    Eigen::MatrixXd z = test::uniform_matrix(11 + k % 5, 9 + k % 7, rng, 0, 1);
    if (k % 3 == 0) z = z.array().round();  // plateaus and ties
    const double d = local_minima_depth(z);
    CHECK(d == doctest::Approx(depth_oracle(z)).epsilon(1e-12));
    CHECK(local_minima_depth((z.array() + 17.25).matrix()) == doctest::Approx(d).epsilon(1e-9));
    CHECK(local_minima_depth(2.5 * z) == doctest::Approx(2.5 * d).epsilon(1e-12));
  }
}

TEST_CASE("depth report deltas") {
  auto r = make_depth_report("S2D", {50, 1000, 2000, 3000, 4000}, {0.031, 0.027, 0.030, 0.022, 0.021});
  REQUIRE(r.deltas.size() == 4);
  const double expect[] = {-0.004, 0.003, -0.008, -0.001};
  for (int i = 0; i < 4; ++i) CHECK(r.deltas[i] == doctest::Approx(expect[i]).epsilon(1e-9));
  CHECK(r.phases.front() == "P1");
  auto back = depth_report_from_json(to_json(r));
  CHECK(back.depths == r.depths);
  CHECK(back.updates == r.updates);
}

TEST_CASE("grid csv round trip") {
  LandscapeGrid g;
  g.alphas = grid_axis(10, 4);
  g.betas = grid_axis(10, 4);
  std::mt19937_64 rng(2);
  g.z = test::uniform_matrix(4, 4, rng, -3, 3);
  g.metadata = {{"schedule", "S2D"}, {"checkpoint", "50"}};
  auto text = grid_csv(g);
  CHECK(text.find("alpha,beta,loss") != std::string::npos);
  auto back = parse_grid_csv(text);
  CHECK(back.z == g.z);
  CHECK(back.alphas == g.alphas);
  CHECK(back.metadata == g.metadata);
  CHECK(error_code_of([] { parse_grid_csv("alpha,beta,loss\n1,2\n"); }) != ErrorCode::Numeric);
}

TEST_CASE("cross density branches coincide at the clone instant") {
  CrossDensitySpec spec;
  spec.agent.batch_size = 32;
  spec.transition = 20;
  spec.budget = {reward::TimeUnit::Episodes, 200};
  spec.checkpoints = {0, 60};
  spec.grid = {10.0, 7};
  spec.batch_size = 64;
  for (auto initial : {reward::Density::Sparse, reward::Density::Dense}) {
    spec.initial = initial;
    auto r = cross_density_run(spec, 9);
    auto [kept, switched] = branch_schedules(initial);
    CHECK(r.keep.schedule == kept);
    CHECK(r.change.schedule == switched);
    CHECK(r.pre_transition.size() == 20);
    REQUIRE(r.keep.grids.size() == 2);
    REQUIRE(r.change.grids.size() == 2);
    CHECK(r.keep.grids[0].z == r.change.grids[0].z);
    CHECK(r.keep.grids[0].metadata.at("batch_fingerprint") == r.change.grids[0].metadata.at("batch_fingerprint"));
    CHECK_FALSE(r.keep.grids[1].z == r.change.grids[1].z);
    CHECK(r.keep.depth.depths[0] == r.change.depth.depths[0]);
    CHECK(std::stoull(r.keep.grids[1].metadata.at("updates_after_transition")) >= 60);
    CHECK(r.change.grids[1].metadata.at("schedule") == reward::to_string(switched));
  }
  CHECK(branch_schedules(reward::Density::Sparse) ==
        std::pair{reward::Schedule::OnlySparse, reward::Schedule::S2D});
  CHECK(branch_schedules(reward::Density::Dense) == std::pair{reward::Schedule::OnlyDense, reward::Schedule::D2S});
}

TEST_CASE("cross density artifact counts for the 4x4 dqn protocol") {
  CrossDensitySpec spec;  // 4x4, DQN, T = 200 of 1000 episodes, checkpoints 50/400/800
  spec.grid.steps = 5;
  auto r = cross_density_run(spec, 0);
  CHECK(r.keep.grids.size() + r.change.grids.size() == 6);
  CHECK(r.keep.depth.depths.size() == 3);
  CHECK(r.change.depth.depths.size() == 3);
  CHECK(r.keep.depth.updates[0] == 50);
  CHECK(r.change.depth.updates[2] == 800);
  CHECK(r.keep.grids[0].z.rows() == 5);
}

TEST_CASE("cross density fails when the budget ends first") {
  CrossDensitySpec spec;
  spec.agent.batch_size = 32;
  spec.transition = 5;
  spec.budget = {reward::TimeUnit::Episodes, 8};
  spec.checkpoints = {100000};
  spec.grid.steps = 3;
  CHECK(error_code_of([&] { cross_density_run(spec, 0); }) == ErrorCode::Precondition);
}
