// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/distributions/binomial.hpp>

#include "agents/algorithms.hpp"
#include "agents/losses.hpp"
#include "agents/policy_loss.hpp"
#include "agents/trainer.hpp"
#include "harness/config.hpp"
#include "harness/experiment.hpp"
#include "harness/report.hpp"
#include "landscape/cross_density.hpp"
#include "landscape/landscape.hpp"
#include "reward/curriculum.hpp"
#include "reward/tabular.hpp"
#include "sharpness/sharpness.hpp"
#include "support.hpp"

using namespace s2d;
namespace fs = std::filesystem;
using s2d::reward::operator+;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  double limit_s = 0.0;  // 0 = no runtime bound
};

int failures = 0;

void criterion(int id, const char* name, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (o.limit_s > 0 && secs > o.limit_s) {
    o.pass = false;
    o.detail += "; runtime over " + std::to_string(static_cast<int>(o.limit_s)) + " s";
  }
  if (!o.pass) ++failures;
  std::printf("%s [%2d] %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

template <class F>
void parallel_for(std::size_t n, F&& f) {
  const unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex mu;
  for (unsigned t = 0; t < std::min<std::size_t>(threads, n); ++t)
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < n; k = next++) {
        try {
          f(k);
        } catch (...) {
          std::lock_guard lock(mu);
          err = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

Outcome pbrs_preservation() {
  auto mdp = reward::make_tabular(env::GridworldSpec::fixed_goal_4x4());
  const double gamma = 0.99, tol = 1e-10;
  auto base = reward::value_iteration(mdp, reward::sparse_reward(mdp, true), gamma, tol);
  auto pot = reward::grid_potential(mdp);
  auto shaped =
      reward::value_iteration(mdp, reward::sparse_reward(mdp, true) + reward::shaping_reward(pot, gamma), gamma, tol);
  bool same = true;
  double worst = 0.0;
  for (int s = 0; s < mdp.num_states(); ++s) {
    same = same && base.greedy[s] == shaped.greedy[s];
    const Eigen::Vector2d p(mdp.states[s].x, mdp.states[s].y);
    for (int a = 0; a < 4; ++a)
      worst = std::max(worst, std::abs(shaped.q(s, a) - base.q(s, a) + reward::potential(p, pot)));
  }
  return {same && worst < 1e-6,
          std::string("greedy sets ") + (same ? "identical" : "differ") + " on 16 states, max Q-shift residual " +
              fmt("%.3g", worst),
          1.0};
}

Outcome support_monotonicity() {
  std::size_t checked = 0;
  bool ok = true;
  auto check = [&](const reward::TabularMdp& mdp) {
    auto pot = reward::grid_potential(mdp);
    auto sparse = reward::support(mdp, reward::sparse_reward(mdp, false));
    auto dense = reward::support(mdp, reward::sparse_reward(mdp, false) + reward::shaping_reward(pot, 0.99));
    std::set<env::Cell> big(dense.begin(), dense.end());
    for (auto c : sparse) ok = ok && big.count(c) == 1;
    ok = ok && sparse.size() < dense.size();
    ++checked;
  };
  check(reward::make_tabular(env::GridworldSpec::fixed_goal_4x4()));
  const auto spec10 = env::GridworldSpec::random_goal_10x10();
  for (auto g : env::candidate_goals(spec10)) check(reward::make_tabular(spec10, g));
  return {ok, "strict inclusion on 4x4 and all " + std::to_string(checked - 1) + " 10x10 goals", 1.0};
}

Outcome telescoping() {
  const auto spec = env::GridworldSpec::random_goal_10x10();
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto cands = env::candidate_goals(spec);
    const auto goal = cands[rng() % cands.size()];
    reward::PotentialSpec pot{env::diameter(spec), Eigen::Vector2d(goal.x, goal.y)};
    const double gamma = k % 2 ? 0.99 : 0.9;
    env::Cell c = spec.start;
    const Eigen::Vector2d s0(c.x, c.y);
    double sum = 0.0, disc = 1.0;
    const int len = 1 + static_cast<int>(rng() % 50);
    for (int t = 0; t < len; ++t) {
      env::Cell n = env::move(spec, c, static_cast<int>(rng() % 4));
      sum += disc * reward::shaping({double(c.x), double(c.y)}, {double(n.x), double(n.y)}, gamma, pot);
      disc *= gamma;
      c = n;
    }
    worst = std::max(worst, std::abs(sum - (disc * reward::potential({double(c.x), double(c.y)}, pot) -
                                            reward::potential(s0, pot))));
  }
  return {worst < 1e-9, "max |error| over 100 trajectories " + fmt("%.3g", worst)};
}

Outcome sharpness_oracle() {
  Eigen::VectorXd theta(2);
  theta << 3, 4;
  sharpness::SharpnessConfig cfg;
  auto r = sharpness::sharpness(
      theta, [](const Eigen::VectorXd& t) { return 0.5 * t.squaredNorm(); },
      [](const Eigen::VectorXd& t) -> Eigen::VectorXd { return t; }, cfg);
  std::mt19937_64 rng(1);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    Eigen::VectorXd g = test::uniform_matrix(1 + k, 1, rng, -3, 3).col(0);
    worst = std::max(worst, (sharpness::ascent_step(g, cfg) - cfg.rho * g / g.norm()).cwiseAbs().maxCoeff());
  }
  return {std::abs(r.sharpness - 0.1002) <= 1e-6 && worst <= 1e-12,
          "sharpness " + fmt("%.10f", r.sharpness) + ", max |eps - rho g/|g|| " + fmt("%.3g", worst)};
}

Outcome direction_invariants() {
  const std::vector<std::vector<std::size_t>> shapes{{4, 64, 64, 4}, {6, 64, 64, 1}, {4, 32, 16, 8, 4}};
  double worst_dot = 0.0, worst_norm = 0.0;
  std::size_t nans = 0, zero_blocks = 0, pairs = 0;
  for (std::size_t k = 0; k < 1000; ++k) {
    auto net = nn::Network::mlp(shapes[k % 3], k);
    if (k % 2) net.biases(0).setRandom();  // the rest keep zero-norm bias blocks
    auto d = landscape::gen_perpendicular_directions(net, 7919 * k + 1);
    ++pairs;
    nans += static_cast<std::size_t>(!d.x.allFinite()) + static_cast<std::size_t>(!d.y.allFinite());
    for (std::size_t b = 0; b < net.num_blocks(); ++b) {
      auto r = net.block(b);
      const auto off = static_cast<Eigen::Index>(r.offset), len = static_cast<Eigen::Index>(r.size);
      const auto x = d.x.segment(off, len), y = d.y.segment(off, len);
      const double nt = net.block_values(b).norm();
      if (nt == 0.0) {
        ++zero_blocks;
        if (!x.isZero() || !y.isZero()) ++nans;
        continue;
      }
      if (x.isZero()) continue;  // single-element blocks admit no orthogonal pair
      worst_dot = std::max(worst_dot, std::abs(x.dot(y)) / (x.norm() * y.norm()));
      worst_norm = std::max({worst_norm, std::abs(x.norm() / nt - 1), std::abs(y.norm() / nt - 1)});
    }
  }
  return {worst_dot < 1e-6 && worst_norm < 1e-6 && nans == 0 && zero_blocks > 0,
          std::to_string(pairs) + " pairs, max rel dot " + fmt("%.3g", worst_dot) + ", max norm error " +
              fmt("%.3g", worst_norm) + ", " + std::to_string(zero_blocks) + " zero-norm blocks, " +
              std::to_string(nans) + " NaN/degenerate faults"};
}

Outcome grid_identity() {
  agents::AgentConfig cfg;
  cfg.batch_size = 64;
  reward::CurriculumSpec c{reward::Schedule::S2D, {10}, reward::TimeUnit::Episodes, 0.99};
  agents::Trainer t(env::Environment(env::GridworldSpec::fixed_goal_4x4()),
                    agents::make_agent(agents::Algorithm::Dqn, cfg, 4, 4, 11), c,
                    agents::Budget{reward::TimeUnit::Episodes, 30}, 11);
  t.run();
  auto snap = t.agent().snapshot();
  auto batch = t.agent().buffer().deterministic_batch(128);
  const double direct = agents::policy_loss_eval(snap, batch, 5);
  agents::PolicyLossEvaluator eval(snap, batch, 5);
  auto dirs = landscape::gen_perpendicular_directions(eval.base(), 3);
  auto odd = landscape::loss_grid(eval, dirs, {10.0, 51}, 1);
  auto serial = landscape::loss_grid(eval, dirs, {10.0, 50}, 1);
  auto parallel = landscape::loss_grid(eval, dirs, {10.0, 50}, 4);
  const bool centre = odd.z(25, 25) == direct;
  const bool same = serial.z == parallel.z;
  return {centre && same, std::string("centre ") + (centre ? "==" : "!=") + " unperturbed loss, serial " +
                              (same ? "==" : "!=") + " 4-thread grid (50x50)"};
}

Outcome smoothing() {
  const std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::vector<double> s2d(seeds.size()), dense(seeds.size());
  parallel_for(seeds.size() * 2, [&](std::size_t k) {
    landscape::CrossDensitySpec spec;  // 4x4 DQN, 1000 episodes, T = 200, checkpoints 50/400/800, 50x50 grids
    spec.initial = k % 2 ? reward::Density::Dense : reward::Density::Sparse;
    auto r = landscape::cross_density_run(spec, seeds[k / 2]);
    if (k % 2) dense[k / 2] = r.keep.depth.mean_depth();  // OnlyDense branch
    else s2d[k / 2] = r.change.depth.mean_depth();        // S2D branch
  });
  double ms = 0, md = 0;
  int wins = 0;
  std::string per;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    ms += s2d[i] / seeds.size();
    md += dense[i] / seeds.size();
    wins += s2d[i] < dense[i];
    per += (i ? " " : "") + fmt("%.3g", s2d[i]) + "/" + fmt("%.3g", dense[i]);
  }
  const auto n = static_cast<double>(seeds.size());
  boost::math::binomial_distribution<double> b(n, 0.5);
  const double p = wins > 0 ? boost::math::cdf(boost::math::complement(b, wins - 1.0)) : 1.0;
  return {ms < md,
          "mean depth S2D " + fmt("%.4g", ms) + " vs OnlyDense " + fmt("%.4g", md) + ", S2D lower on " +
              std::to_string(wins) + "/" + std::to_string(seeds.size()) + " seeds, one-sided sign test p=" +
              fmt("%.4f", p) + " [per seed S2D/OnlyDense: " + per + "]",
          600.0};
}

Outcome performance_direction() {
  const std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::vector<double> s2d(seeds.size()), sparse(seeds.size());
  parallel_for(seeds.size() * 2, [&](std::size_t k) {
    const bool staged = k % 2 == 0;
    reward::CurriculumSpec c{staged ? reward::Schedule::S2D : reward::Schedule::OnlySparse,
                             staged ? std::vector<std::uint64_t>{5000} : std::vector<std::uint64_t>{},
                             reward::TimeUnit::EnvSteps, 0.99};
    env::Environment e(env::GridworldSpec::random_goal_10x10());
    const auto seed = seeds[k / 2];
    agents::Trainer t(e, agents::make_agent(agents::Algorithm::Ppo, agents::AgentConfig{}, 4, 4, seed), c,
                      agents::Budget{reward::TimeUnit::EnvSteps, 100000}, seed);
    std::string metrics = harness::metrics_header();
    t.run([&](const agents::EpisodeRecord& r) { metrics += harness::metrics_row("acc", seed, r); });
    (staged ? s2d : sparse)[k / 2] = harness::summarize_metrics(metrics).final_success;
  });
  auto stat_s = harness::mean_std(s2d), stat_o = harness::mean_std(sparse);
  return {stat_s.mean >= stat_o.mean,
          "final success S2D@5000 " + fmt("%.3f", stat_s.mean) + " +- " + fmt("%.3f", stat_s.std) +
              " vs OnlySparse " + fmt("%.3f", stat_o.mean) + " +- " + fmt("%.3f", stat_o.std) + " (5 seeds)",
          1200.0};
}

Outcome gradients() {
  std::mt19937_64 rng(77);
  double worst = 0.0;
  int nets = 0, retries = 0;
  std::map<std::string, double> by_loss;
  std::string current;
  auto fd_check = [&](const nn::Network& net, const nn::Vector& g, const std::function<double(const nn::Network&)>& f) {
    auto loss = [&](const Eigen::VectorXd& th) { return f(nn::Network::from_params(net.layer_dims(), th)); };
    Eigen::VectorXd err = (g - test::finite_diff(loss, net.params())).cwiseAbs();
    // A ReLU kink inside the step breaks central differences; shrink the step for those coordinates only.
    for (double h : {1e-6, 1e-7}) {
      if (err.maxCoeff() < 1e-4) break;
      ++retries;
      err = err.cwiseMin((g - test::finite_diff(loss, net.params(), h)).cwiseAbs());
    }
    const double e = err.maxCoeff();
    worst = std::max(worst, e);
    by_loss[current] = std::max(by_loss[current], e);
    ++nets;
  };
  for (std::uint64_t k = 0; k < 10; ++k) {
    std::vector<agents::Transition> disc, cont;
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 12; ++i) {
      agents::Transition t;
      t.state = test::uniform_matrix(4, 1, rng).col(0);
      t.next_state = test::uniform_matrix(4, 1, rng).col(0);
      t.reward = u(rng);
      t.done = i % 5 == 0;
      t.action = Eigen::VectorXd::Constant(1, static_cast<double>(rng() % 4));
      t.log_prob = std::log(0.1 + 0.4 * (u(rng) + 1));
      t.advantage = u(rng);
      t.value_target = u(rng);
      disc.push_back(t);
      t.action = test::uniform_matrix(2, 1, rng, -0.9, 0.9).col(0);
      cont.push_back(t);
    }
    auto db = agents::make_batch(disc), cb = agents::make_batch(cont);
    auto q = test::random_net({4, 16, 16, 4}, 10 + k), qt = test::random_net({4, 16, 16, 4}, 20 + k);
    auto y = agents::dqn_targets(qt, db, 0.99);
    current = "dqn_td";
    fd_check(q, agents::dqn_td_loss_and_grad(q, db, y).grads.values,
             [&](const nn::Network& n) { return agents::dqn_td_loss(n, db, y); });
    auto pi = test::random_net({4, 16, 16, 4}, 30 + k);
    current = "ppo_policy";
    fd_check(pi, agents::ppo_policy_loss_and_grad(pi, db, 0.2, 0.03).grads.values, [&](const nn::Network& n) {
      auto r = agents::ppo_policy_loss_and_grad(n, db, 0.2, 0.03);
      return r.surrogate - 0.03 * r.entropy;
    });
    auto v = test::random_net({4, 16, 16, 1}, 40 + k);
    current = "ppo_value";
    fd_check(v, agents::ppo_value_loss_and_grad(v, db).grads.values,
             [&](const nn::Network& n) { return agents::ppo_value_loss_and_grad(n, db).loss; });
    nn::Matrix noise = test::uniform_matrix(2, 12, rng);
    auto sp = test::random_net({4, 16, 16, 4}, 50 + k);
    auto q1 = test::random_net({6, 16, 16, 1}, 60 + k), q2 = test::random_net({6, 16, 16, 1}, 70 + k);
    auto sv = test::random_net({4, 16, 16, 1}, 80 + k), svt = test::random_net({4, 16, 16, 1}, 90 + k);
    current = "sac_policy";
    fd_check(sp, agents::sac_policy_loss_and_grad(sp, q1, q2, cb, noise, 0.2).grads.values,
             [&](const nn::Network& n) { return agents::sac_policy_loss(n, q1, q2, cb, noise, 0.2); });
    current = "sac_q";
    fd_check(q1, agents::sac_q_loss_and_grad(q1, svt, cb, 0.99).grads.values,
             [&](const nn::Network& n) { return agents::sac_q_loss_and_grad(n, svt, cb, 0.99).loss; });
    current = "sac_value";
    fd_check(sv, agents::sac_value_loss_and_grad(sv, sp, q1, q2, cb, noise, 0.2).grads.values, [&](const nn::Network& n) {
      return agents::sac_value_loss_and_grad(n, sp, q1, q2, cb, noise, 0.2).loss;
    });
  }
  std::string per;
  for (const auto& [name, e] : by_loss) per += (per.empty() ? "" : ", ") + name + " " + fmt("%.2g", e);
  return {worst < 1e-4,
          std::to_string(nets) + " nets over 6 losses, max |analytic - fd| " + fmt("%.3g", worst) + " [" + per + "], " +
              std::to_string(retries) + " nets re-checked with a smaller step"};
}

Outcome reproducibility() {
  const auto root = fs::temp_directory_path() / "s2d_acceptance_repro";
  fs::remove_all(root);
  auto make = [&](const std::string& sub) {
    auto c = harness::config_from_json({{"version", 1},
                                        {"run_id", "repro"},
                                        {"transitions", "C2"},
                                        {"budget", 300},
                                        {"seeds", {3}},
                                        {"output_dir", (root / sub).string()}});
    return harness::run_experiment(c);
  };
  auto a = make("a"), b = make("b");
  const std::string key = "seed_3/metrics.csv";
  const bool hashes = a.all_ok() && b.all_ok() && a.seeds[0].artifacts.at(key) == b.seeds[0].artifacts.at(key) &&
                      a.seeds[0].artifacts == b.seeds[0].artifacts;
  double worst = 0.0;
  for (const auto& sub : {"a", "b"}) {
    const auto dir = root / sub / "repro" / "seed_3";
    auto snap = agents::load_snapshot((dir / "snapshot.json").string());
    std::ifstream in(dir / "batch.json");
    auto batch = agents::batch_from_json(nlohmann::json::parse(in));
    const auto path = (root / "copy.json").string();
    agents::save_snapshot(snap, path);
    auto back = agents::load_snapshot(path);
    worst = std::max(worst, std::abs(agents::policy_loss_eval(back, batch, 9) - agents::policy_loss_eval(snap, batch, 9)));
  }
  fs::remove_all(root);
  return {hashes && worst <= 1e-12,
          std::string("metrics.csv hash ") + (hashes ? a.seeds[0].artifacts.at(key) + " twice" : "differs") +
              ", snapshot round-trip loss delta " + fmt("%.3g", worst)};
}

Outcome depth_report_deltas() {
  harness::RunSummary r;
  r.run_id = "fixture";
  r.env_key = "{}";
  r.schedule = "S2D";
  r.depth["S2D"] = {landscape::make_depth_report("S2D", {50, 1000, 2000, 3000, 4000},
                                                  {0.031, 0.027, 0.030, 0.022, 0.021})};
  auto rep = harness::compare_report({r, r});
  const auto& d = rep.json["depth"][0]["deltas"];
  const double expect[] = {-0.004, 0.003, -0.008, -0.001};
  bool ok = d.size() == 4;
  std::string got;
  for (std::size_t i = 0; ok && i < 4; ++i) {
    ok = std::abs(d[i].get<double>() - expect[i]) < 1e-9;
    got += (i ? ", " : "") + fmt("%+.3f", d[i].get<double>());
  }
  return {ok, "deltas " + got};
}

}  // namespace

int main() {
  criterion(1, "PBRS optimality preservation", pbrs_preservation);
  criterion(2, "support monotonicity", support_monotonicity);
  criterion(3, "telescoping shaping identity", telescoping);
  criterion(4, "sharpness analytic oracle", sharpness_oracle);
  criterion(5, "direction invariants", direction_invariants);
  criterion(6, "grid identity and determinism", grid_identity);
  criterion(7, "smoothing after the sparse-to-dense switch (4x4 DQN)", smoothing);
  criterion(8, "performance direction (10x10 PPO)", performance_direction);
  criterion(9, "gradient correctness", gradients);
  criterion(10, "reproducibility", reproducibility);
  criterion(11, "depth report delta arithmetic", depth_report_deltas);
  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
