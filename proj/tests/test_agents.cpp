#include <cmath>
#include <filesystem>
#include <numbers>

#include "agents/algorithms.hpp"
#include "agents/policy_loss.hpp"
#include "agents/trainer.hpp"
#include "doctest.h"
#include "envs/env.hpp"
#include "support.hpp"

using namespace s2d;
using namespace s2d::agents;
using s2d::test::error_code_of;

namespace {

Transition tr(std::uint64_t episode, int action = 0, std::size_t obs = 4) {
  Transition t;
  t.state = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(obs), 0.1 * static_cast<double>(episode));
  t.next_state = t.state.array() + 0.05;
  t.action = Eigen::VectorXd::Constant(1, action);
  t.reward = -0.1;
  t.episode = episode;
  return t;
}

Batch random_discrete_batch(std::mt19937_64& rng, int n, int actions = 4) {
  std::vector<Transition> items;
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < n; ++i) {
    Transition t;
    t.state = test::uniform_matrix(4, 1, rng).col(0);
    t.next_state = test::uniform_matrix(4, 1, rng).col(0);
    t.action = Eigen::VectorXd::Constant(1, static_cast<double>(rng() % actions));
    t.reward = u(rng);
    t.done = rng() % 4 == 0;
    t.log_prob = std::log(0.1 + 0.8 * (u(rng) + 1) / 2);
    t.advantage = u(rng);
    t.value_target = u(rng);
    items.push_back(t);
  }
  return make_batch(items);
}

Batch random_continuous_batch(std::mt19937_64& rng, int n) {
  std::vector<Transition> items;
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < n; ++i) {
    Transition t;
    t.state = test::uniform_matrix(4, 1, rng).col(0);
    t.next_state = test::uniform_matrix(4, 1, rng).col(0);
    t.action = test::uniform_matrix(2, 1, rng, -0.9, 0.9).col(0);
    t.reward = u(rng);
    t.done = rng() % 4 == 0;
    items.push_back(t);
  }
  return make_batch(items);
}

void check_grad(const nn::Network& net, const nn::Vector& analytic,
                const std::function<double(const nn::Network&)>& loss) {
  auto f = [&](const Eigen::VectorXd& theta) {
    return loss(nn::Network::from_params(net.layer_dims(), theta));
  };
  Eigen::VectorXd fd = test::finite_diff(f, net.params());
  CHECK((analytic - fd).cwiseAbs().maxCoeff() < 1e-4);
}

}  // namespace

TEST_CASE("replay buffer is FIFO") {
  ReplayBuffer buf(3);
  for (std::uint64_t e = 1; e <= 5; ++e) buf.push(tr(e));
  CHECK(buf.size() == 3);
  CHECK(buf[0].episode == 3);
  CHECK(buf[2].episode == 5);
}

TEST_CASE("deterministic_sample returns the newest items in order") {
  ReplayBuffer buf(100);
  CHECK(error_code_of([&] { buf.deterministic_sample(4); }) == ErrorCode::Precondition);
  for (std::uint64_t e = 1; e <= 10; ++e) buf.push(tr(e));
  auto s = buf.deterministic_sample(4);
  REQUIRE(s.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) CHECK(s[k].episode == 7 + k);
  auto all = buf.deterministic_sample(50);
  REQUIRE(all.size() == 10);
  for (std::size_t k = 0; k < 10; ++k) CHECK(all[k].episode == k + 1);
  auto b1 = buf.deterministic_batch(4);
  auto b2 = buf.deterministic_batch(4);
  CHECK(b1.fingerprint() == b2.fingerprint());
  CHECK(b1.states == b2.states);
}

TEST_CASE("batch json round trip") {
  std::mt19937_64 rng(1);
  auto b = random_discrete_batch(rng, 7);
  auto back = batch_from_json(nlohmann::json::parse(to_json(b).dump()));
  CHECK(back.fingerprint() == b.fingerprint());
  CHECK(back.states == b.states);
  CHECK(back.log_probs == b.log_probs);
}

TEST_CASE("dqn action selection") {
  AgentConfig cfg;
  DqnAgent agent(cfg, 4, 4, 3);
  Eigen::VectorXd obs(4);
  obs << 0.2, 0.4, 1.0, 1.0;
  agent.set_epsilon(0.0);
  Eigen::VectorXd q = agent.online().forward(obs);
  Eigen::Index best;
  q.maxCoeff(&best);
  CHECK(agent.act(obs, ActMode::Explore).action[0] == static_cast<double>(best));

  agent.set_epsilon(1.0);
  std::array<int, 4> counts{};
  for (int i = 0; i < 10000; ++i) ++counts[static_cast<std::size_t>(agent.act(obs, ActMode::Explore).action[0])];
  for (int c : counts) CHECK(std::abs(c - 2500) <= 150);
  CHECK(agent.act(obs, ActMode::Greedy).action[0] == static_cast<double>(best));
}

TEST_CASE("dqn epsilon schedule") {
  DqnAgent agent(AgentConfig{}, 4, 4, 0);
  agent.begin_episode(0.0);
  CHECK(agent.epsilon() == 1.0);
  agent.begin_episode(0.25);
  CHECK(agent.epsilon() == doctest::Approx(1.0 - 0.95 * 0.5));
  agent.begin_episode(0.5);
  CHECK(agent.epsilon() == doctest::Approx(0.05));
  agent.begin_episode(0.9);
  CHECK(agent.epsilon() == doctest::Approx(0.05));
}

TEST_CASE("dqn td loss hand cases") {
  // 1-in, 2-out linear nets: Q(s) = W s + b
  nn::Vector p(4);
  p << 1.0, -2.0, 0.5, 0.0;
  auto online = nn::Network::from_params({1, 2}, p);
  nn::Vector pt(4);
  pt << 2.0, 1.0, 0.0, 0.0;
  auto target = nn::Network::from_params({1, 2}, pt);
  Transition t;
  t.state = Eigen::VectorXd::Constant(1, 1.0);      // Q(s) = (1.5, -2)
  t.next_state = Eigen::VectorXd::Constant(1, 0.5);  // Qt(s') = (1, 0.5)
  t.action = Eigen::VectorXd::Constant(1, 0);
  t.reward = 0.2;
  auto b = make_batch(std::vector<Transition>{t});
  auto y = dqn_targets(target, b, 0.9);
  CHECK(y[0] == doctest::Approx(0.2 + 0.9 * 1.0));
  // |1.5 - 1.1| = 0.4 < 1 -> 0.5 * 0.16
  CHECK(dqn_td_loss(online, b, y) == doctest::Approx(0.08));

  t.done = true;
  b = make_batch(std::vector<Transition>{t});
  y = dqn_targets(target, b, 0.9);
  CHECK(y[0] == doctest::Approx(0.2));
  // |1.5 - 0.2| = 1.3 > 1 -> 1.3 - 0.5
  CHECK(dqn_td_loss(online, b, y) == doctest::Approx(0.8));

  // Q already on target: zero loss and zero gradient
  nn::Vector yq(1);
  yq << 1.5;
  auto lg = dqn_td_loss_and_grad(online, b, yq);
  CHECK(lg.loss == 0.0);
  CHECK(lg.grads.values.isZero());
}

TEST_CASE("dqn target network is stale between hard copies") {
  AgentConfig cfg;
  cfg.target_update_every = 5;
  cfg.batch_size = 8;
  DqnAgent agent(cfg, 4, 4, 1);
  std::mt19937_64 rng(2);
  auto b = random_discrete_batch(rng, 8);
  const auto t0 = agent.target();
  for (int k = 1; k <= 4; ++k) {
    agent.update(b);
    CHECK(agent.target() == t0);
    CHECK_FALSE(agent.online() == t0);
  }
  agent.update(b);
  CHECK(agent.target() == agent.online());
}

TEST_CASE("ppo ratio identity and zero advantages") {
  std::mt19937_64 rng(4);
  auto policy = test::random_net({4, 16, 4}, 9);
  auto b = random_discrete_batch(rng, 12);
  nn::Matrix logp = log_softmax(policy.forward(b.states));
  for (Eigen::Index j = 0; j < b.states.cols(); ++j)
    b.log_probs[j] = logp(static_cast<Eigen::Index>(b.actions(0, j)), j);
  CHECK(ppo_surrogate(policy, b, 0.2) == doctest::Approx(-b.advantages.mean()).epsilon(1e-12));

  b.advantages.setZero();
  auto lg = ppo_surrogate_and_grad(policy, b, 0.2);
  CHECK(lg.loss == 0.0);
  CHECK(lg.grads.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("ppo clipped surrogate hand case") {
  // two actions, logits = bias only, so pi = softmax(b) for every state
  nn::Vector p = nn::Vector::Zero(1 * 2 + 2);
  p[2] = std::log(3.0);  // pi = (0.75, 0.25)
  auto policy = nn::Network::from_params({1, 2}, p);
  std::vector<Transition> items(2);
  items[0].state = items[1].state = Eigen::VectorXd::Zero(1);
  items[0].next_state = items[1].next_state = Eigen::VectorXd::Zero(1);
  items[0].action = Eigen::VectorXd::Constant(1, 0);
  items[0].log_prob = std::log(0.5);  // ratio 1.5 -> clipped to 1.2 for A > 0
  items[0].advantage = 2.0;
  items[1].action = Eigen::VectorXd::Constant(1, 1);
  items[1].log_prob = std::log(0.5);  // ratio 0.5 -> clipped to 0.8, min picks 0.8 * A for A < 0
  items[1].advantage = -1.0;
  auto b = make_batch(items);
  const double expect = -0.5 * (std::min(1.5 * 2.0, 1.2 * 2.0) + std::min(0.5 * -1.0, 0.8 * -1.0));
  CHECK(ppo_surrogate(policy, b, 0.2) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("gae on a hand rollout") {
  std::vector<Transition> r(3);
  const double v[3] = {0.5, 0.2, -0.1};
  const double rew[3] = {1.0, 0.0, 2.0};
  for (int k = 0; k < 3; ++k) {
    r[k].value = v[k];
    r[k].reward = rew[k];
  }
  r[2].done = true;
  compute_gae(r, 0.9, 0.5);
  const double d2 = 2.0 - (-0.1);
  const double d1 = 0.0 + 0.9 * -0.1 - 0.2;
  const double d0 = 1.0 + 0.9 * 0.2 - 0.5;
  const double a2 = d2, a1 = d1 + 0.45 * a2, a0 = d0 + 0.45 * a1;
  CHECK(r[0].value_target == doctest::Approx(a0 + 0.5));
  CHECK(r[2].value_target == doctest::Approx(a2 - 0.1));
  const double mean = (a0 + a1 + a2) / 3;
  const double sd = std::sqrt(((a0 - mean) * (a0 - mean) + (a1 - mean) * (a1 - mean) + (a2 - mean) * (a2 - mean)) / 3);
  CHECK(r[1].advantage == doctest::Approx((a1 - mean) / (sd + 1e-8)));
}

TEST_CASE("sac squashed sample hand case and bounds") {
  nn::Matrix out(4, 1);
  out << 0.3, -0.2, std::log(0.5), 3.0;  // second log-std clamps to 2
  nn::Matrix noise(2, 1);
  noise << 0.4, -1.0;
  auto s = squashed_sample(out, noise);
  const double u0 = 0.3 + 0.5 * 0.4, u1 = -0.2 + std::exp(2.0) * -1.0;
  CHECK(s.actions(0, 0) == doctest::Approx(std::tanh(u0)));
  CHECK(s.actions(1, 0) == doctest::Approx(std::tanh(u1)));
  const double c = 0.5 * std::log(2 * std::numbers::pi);
  const double lp = (-0.08 - std::log(0.5) - c - std::log(1 - std::tanh(u0) * std::tanh(u0) + 1e-6)) +
                    (-0.5 - 2.0 - c - std::log(1 - std::tanh(u1) * std::tanh(u1) + 1e-6));
  CHECK(s.log_probs[0] == doctest::Approx(lp).epsilon(1e-12));

  SacAgent agent(AgentConfig{}, 4, 2, 0);
  for (int i = 0; i < 50; ++i) {
    auto a = agent.act(Eigen::VectorXd::Random(4), ActMode::Explore);
    CHECK(a.action.cwiseAbs().maxCoeff() < 1.0);
    CHECK(agent.env_action(a).cwiseAbs().maxCoeff() <= 0.1);
  }
  Eigen::VectorXd obs = Eigen::VectorXd::Constant(4, 0.3);
  auto g = agent.act(obs, ActMode::Greedy);
  Eigen::VectorXd head = agent.policy().forward(obs);
  Eigen::VectorXd mean = head.head(2).array().tanh();
  CHECK((g.action - mean).norm() < 1e-15);
}

TEST_CASE("sac policy loss with zero critics and min property") {
  std::mt19937_64 rng(6);
  auto policy = test::random_net({4, 16, 4}, 2);
  auto q1 = test::random_net({6, 16, 1}, 3);
  auto q2 = test::random_net({6, 16, 1}, 4);
  auto b = random_continuous_batch(rng, 9);
  nn::Matrix noise = test::uniform_matrix(2, 9, rng);
  auto zq = q1;
  zq.params().setZero();
  auto s = squashed_sample(policy.forward(b.states), noise);
  CHECK(sac_policy_loss(policy, zq, zq, b, noise, 0.2) == doctest::Approx(0.2 * s.log_probs.mean()).epsilon(1e-12));

  nn::Matrix in = q_input(b.states, s.actions);
  nn::Vector v1 = q1.forward(in).row(0).transpose(), v2 = q2.forward(in).row(0).transpose();
  nn::Vector m = v1.cwiseMin(v2);
  CHECK((m.array() <= v1.array()).all());
  CHECK((m.array() <= v2.array()).all());
  CHECK(sac_policy_loss(policy, q1, q2, b, noise, 0.2) ==
        doctest::Approx((0.2 * s.log_probs - m).mean()).epsilon(1e-12));
}

TEST_CASE("sac one transition with frozen constant nets") {
  // policy outputs bias only: mean 0.1, log-std -1 per dim; critics and value are constants
  nn::Vector pp = nn::Vector::Zero(4 * 4 + 4);
  pp.tail(4) << 0.1, 0.1, -1.0, -1.0;
  auto policy = nn::Network::from_params({4, 4}, pp);
  auto constant = [](std::size_t in, double c) {
    nn::Vector p = nn::Vector::Zero(static_cast<Eigen::Index>(in + 1));
    p[static_cast<Eigen::Index>(in)] = c;
    return nn::Network::from_params({in, 1}, p);
  };
  auto q1 = constant(6, 0.7), q2 = constant(6, 0.4), v = constant(4, 0.3), vt = constant(4, -0.2);
  Transition t;
  t.state = Eigen::VectorXd::Constant(4, 0.5);
  t.next_state = t.state;
  t.action = Eigen::VectorXd::Constant(2, 0.2);
  t.reward = 1.0;
  auto b = make_batch(std::vector<Transition>{t});
  nn::Matrix noise(2, 1);
  noise << 0.5, -0.5;
  const double sd = std::exp(-1.0);
  const double c = 0.5 * std::log(2 * std::numbers::pi);
  double lp = 0;
  for (double n : {0.5, -0.5}) {
    const double a = std::tanh(0.1 + sd * n);
    lp += -0.5 * n * n + 1.0 - c - std::log(1 - a * a + 1e-6);
  }
  CHECK(sac_policy_loss(policy, q1, q2, b, noise, 0.2) == doctest::Approx(0.2 * lp - 0.4).epsilon(1e-12));
  CHECK(sac_q_loss_and_grad(q1, vt, b, 0.99).loss == doctest::Approx(std::pow(0.7 - (1.0 + 0.99 * -0.2), 2)));
  CHECK(sac_value_loss_and_grad(v, policy, q1, q2, b, noise, 0.2).loss ==
        doctest::Approx(std::pow(0.3 - (0.4 - 0.2 * lp), 2)).epsilon(1e-12));
}

TEST_CASE("loss gradients match finite differences on random nets") {
  std::mt19937_64 rng(8);
  for (std::uint64_t k = 0; k < 10; ++k) {
    auto b = random_discrete_batch(rng, 10);
    auto online = test::random_net({4, 12, 12, 4}, 100 + k);
    auto target = test::random_net({4, 12, 12, 4}, 200 + k);
    auto y = dqn_targets(target, b, 0.99);
    check_grad(online, dqn_td_loss_and_grad(online, b, y).grads.values,
               [&](const nn::Network& n) { return dqn_td_loss(n, b, y); });

    auto policy = test::random_net({4, 12, 12, 4}, 300 + k);
    check_grad(policy, ppo_policy_loss_and_grad(policy, b, 0.2, 0.03).grads.values, [&](const nn::Network& n) {
      auto r = ppo_policy_loss_and_grad(n, b, 0.2, 0.03);
      return r.surrogate - 0.03 * r.entropy;
    });
    check_grad(policy, ppo_surrogate_and_grad(policy, b, 0.2).grads.values,
               [&](const nn::Network& n) { return ppo_surrogate(n, b, 0.2); });
    auto value = test::random_net({4, 12, 1}, 400 + k);
    check_grad(value, ppo_value_loss_and_grad(value, b).grads.values,
               [&](const nn::Network& n) { return ppo_value_loss_and_grad(n, b).loss; });

    auto cb = random_continuous_batch(rng, 10);
    nn::Matrix noise = test::uniform_matrix(2, 10, rng);
    auto sp = test::random_net({4, 12, 12, 4}, 500 + k);
    auto q1 = test::random_net({6, 12, 1}, 600 + k);
    auto q2 = test::random_net({6, 12, 1}, 700 + k);
    auto sv = test::random_net({4, 12, 1}, 800 + k);
    auto svt = test::random_net({4, 12, 1}, 900 + k);
    check_grad(sp, sac_policy_loss_and_grad(sp, q1, q2, cb, noise, 0.2).grads.values,
               [&](const nn::Network& n) { return sac_policy_loss(n, q1, q2, cb, noise, 0.2); });
    check_grad(q1, sac_q_loss_and_grad(q1, svt, cb, 0.99).grads.values,
               [&](const nn::Network& n) { return sac_q_loss_and_grad(n, svt, cb, 0.99).loss; });
    check_grad(sv, sac_value_loss_and_grad(sv, sp, q1, q2, cb, noise, 0.2).grads.values,
               [&](const nn::Network& n) { return sac_value_loss_and_grad(n, sp, q1, q2, cb, noise, 0.2).loss; });
  }
}

TEST_CASE("policy_loss_eval is pure and survives snapshot round trips") {
  std::mt19937_64 rng(10);
  const auto dir = std::filesystem::temp_directory_path();
  for (auto alg : {Algorithm::Dqn, Algorithm::Ppo, Algorithm::Sac}) {
    const bool cont = alg == Algorithm::Sac;
    auto agent = make_agent(alg, AgentConfig{}, 4, cont ? 2 : 4, 7);
    auto b = cont ? random_continuous_batch(rng, 16) : random_discrete_batch(rng, 16);
    auto snap = agent->snapshot();
    const double l1 = policy_loss_eval(snap, b, 3);
    CHECK(policy_loss_eval(snap, b, 3) == l1);
    CHECK(std::isfinite(l1));
    const auto path = (dir / ("s2d_snap_" + to_string(alg) + ".json")).string();
    save_snapshot(snap, path);
    auto back = load_snapshot(path);
    CHECK(std::abs(policy_loss_eval(back, b, 3) - l1) <= 1e-12);
    std::filesystem::remove(path);

    PolicyLossEvaluator eval(snap, b, 3);
    CHECK(eval(eval.base()) == l1);
    CHECK(eval.with_grad(eval.base()).loss == doctest::Approx(l1).epsilon(1e-12));
  }
}

TEST_CASE("policy_loss_eval edge cases") {
  // DQN with online == target and rewards consistent with the Bellman equation
  DqnAgent agent(AgentConfig{}, 4, 4, 2);
  auto snap = agent.snapshot();
  std::vector<Transition> items;
  for (int i = 0; i < 5; ++i) {
    Transition t = tr(static_cast<std::uint64_t>(i), i % 4);
    t.done = true;
    t.reward = agent.online().forward(t.state)[i % 4];
    items.push_back(t);
  }
  CHECK(policy_loss_eval(snap, make_batch(items), 0) == doctest::Approx(0.0).epsilon(1e-15));

  std::mt19937_64 rng(1);
  auto cb = random_continuous_batch(rng, 4);
  CHECK(error_code_of([&] { policy_loss_eval(snap, cb, 0); }) == ErrorCode::DimensionMismatch);
  auto sac = make_agent(Algorithm::Sac, AgentConfig{}, 4, 2, 0)->snapshot();
  CHECK(error_code_of([&] { policy_loss_eval(sac, random_discrete_batch(rng, 4), 0); }) ==
        ErrorCode::DimensionMismatch);
}

TEST_CASE("training is deterministic and trainers clone mid episode") {
  for (auto alg : {Algorithm::Dqn, Algorithm::Ppo}) {
    AgentConfig cfg;
    cfg.batch_size = 16;
    cfg.minibatch = 32;
    auto make = [&] {
      reward::CurriculumSpec c{reward::Schedule::S2D, {10}, reward::TimeUnit::Episodes, 0.99};
      return Trainer(env::Environment(env::GridworldSpec::fixed_goal_4x4()), make_agent(alg, cfg, 4, 4, 5), c,
                     Budget{reward::TimeUnit::Episodes, 20}, 5);
    };
    std::vector<EpisodeRecord> a, b;
    auto t1 = make();
    t1.run([&](const EpisodeRecord& r) { a.push_back(r); });
    auto t2 = make();
    t2.run([&](const EpisodeRecord& r) { b.push_back(r); });
    REQUIRE(a.size() == 20);
    REQUIRE(b.size() == 20);
    for (std::size_t k = 0; k < a.size(); ++k) {
      CHECK(a[k].ret == b[k].ret);
      CHECK(a[k].env_step == b[k].env_step);
      CHECK(a[k].loss_main == b[k].loss_main);
      CHECK(a[k].stage == (k < 10 ? 1 : 2));
    }
    CHECK(t1.agent().snapshot().net(probed_network(alg)) == t2.agent().snapshot().net(probed_network(alg)));

    auto t3 = make();
    for (int k = 0; k < 37; ++k) t3.step();
    auto t4 = t3;
    std::vector<EpisodeRecord> c, d;
    t3.run([&](const EpisodeRecord& r) { c.push_back(r); });
    t4.run([&](const EpisodeRecord& r) { d.push_back(r); });
    REQUIRE(c.size() == d.size());
    for (std::size_t k = 0; k < c.size(); ++k) CHECK(c[k].ret == d[k].ret);
  }
}

TEST_CASE("trainer rejects algorithm and env mismatches") {
  reward::CurriculumSpec c{reward::Schedule::OnlySparse, {}, reward::TimeUnit::Episodes, 0.99};
  CHECK(error_code_of([&] {
          Trainer(env::Environment(env::GridworldSpec::fixed_goal_4x4()),
                  make_agent(Algorithm::Sac, AgentConfig{}, 4, 2, 0), c, Budget{}, 0);
        }) == ErrorCode::InvalidSpec);
  CHECK(error_code_of([&] {
          Trainer(env::Environment(env::PointReacherSpec{}), make_agent(Algorithm::Dqn, AgentConfig{}, 4, 4, 0), c,
                  Budget{}, 0);
        }) == ErrorCode::InvalidSpec);
}

TEST_CASE("sac trains on the point reacher") {
  AgentConfig cfg;
  cfg.batch_size = 32;
  reward::CurriculumSpec c{reward::Schedule::OnlyDense, {}, reward::TimeUnit::EnvSteps, 0.99};
  Trainer t(env::Environment(env::PointReacherSpec{}), make_agent(Algorithm::Sac, cfg, 4, 2, 1), c,
            Budget{reward::TimeUnit::EnvSteps, 300}, 1);
  std::size_t updates = 0;
  t.run([&](const EpisodeRecord& r) {
    updates += r.updates;
    CHECK(std::isfinite(r.loss_main));
  });
  CHECK(t.env_steps() == 300);
  CHECK(t.agent().update_count() == 300 - 31);
  CHECK(updates <= 300 - 31);
}
