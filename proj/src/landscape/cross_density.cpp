#include "landscape/cross_density.hpp"

#include <algorithm>

#include "common/error.hpp"
#include "common/hash.hpp"
#include "common/seeding.hpp"

namespace s2d::landscape {

namespace {

constexpr std::uint64_t kAgentStream = 0xa6e7;
constexpr std::uint64_t kEnvStream = 0xe7f;
constexpr std::uint64_t kDirectionStream = 0xd1e;
constexpr std::uint64_t kEvalStream = 0xe7a1;

}  // namespace

std::pair<reward::Schedule, reward::Schedule> branch_schedules(reward::Density initial) {
  if (initial == reward::Density::Sparse) return {reward::Schedule::OnlySparse, reward::Schedule::S2D};
  return {reward::Schedule::OnlyDense, reward::Schedule::D2S};
}

void validate(const CrossDensitySpec& s) {
  env::validate(s.env);
  agents::validate(s.agent);
  require(s.transition > 0, ErrorCode::InvalidSpec, "transition must be positive");
  require(s.budget.total > 0, ErrorCode::InvalidSpec, "budget must be positive");
  if (s.unit == s.budget.unit)
    require(s.transition < s.budget.total, ErrorCode::InvalidSpec, "transition must lie inside the training budget");
  require(!s.checkpoints.empty(), ErrorCode::InvalidSpec, "at least one checkpoint is required");
  require(std::is_sorted(s.checkpoints.begin(), s.checkpoints.end()) &&
              std::adjacent_find(s.checkpoints.begin(), s.checkpoints.end()) == s.checkpoints.end(),
          ErrorCode::InvalidSpec, "checkpoints must be strictly increasing");
  require(s.batch_size > 0, ErrorCode::InvalidSpec, "landscape batch size must be positive");
  require(s.grid.steps >= 1, ErrorCode::InvalidSpec, "grid steps must be positive");
}

namespace {

struct Capture {
  const CrossDensitySpec& spec;
  std::uint64_t seed;
  std::uint64_t gen_seed;

  LandscapeGrid grid(const agents::Trainer& tr, reward::Schedule schedule, std::uint64_t checkpoint,
                     std::uint64_t base_updates) const {
    const auto& agent = tr.agent();
    require(!agent.buffer().empty(), ErrorCode::Precondition, "replay buffer empty at a landscape checkpoint");
    const std::uint64_t eval_seed = derive_seed({seed, kEvalStream, checkpoint});
    agents::PolicyLossEvaluator eval(agent.snapshot(), agent.buffer().deterministic_batch(spec.batch_size), eval_seed);
    auto dirs = draw_directions(eval.base(), gen_seed).normalize(eval.base());
    auto g = loss_grid(eval, dirs, spec.grid, spec.threads);
    auto& m = g.metadata;
    m["run_id"] = spec.run_id;
    m["seed"] = std::to_string(seed);
    m["schedule"] = reward::to_string(schedule);
    m["algorithm"] = agents::to_string(spec.algorithm);
    m["probed_network"] = agents::probed_network(spec.algorithm);
    m["transition"] = std::to_string(spec.transition);
    m["checkpoint"] = std::to_string(checkpoint);
    m["updates_after_transition"] = std::to_string(agent.update_count() - base_updates);
    m["batch_fingerprint"] = hex64(eval.batch().fingerprint());
    m["batch_size"] = std::to_string(eval.batch().size());
    m["gen_seed"] = std::to_string(gen_seed);
    m["eval_seed"] = std::to_string(eval_seed);
    return g;
  }
};

void run_branch(agents::Trainer& tr, BranchResult& out, const CrossDensitySpec& spec, const Capture& cap) {
  const std::uint64_t base = tr.agent().update_count();
  std::vector<double> depths;
  std::vector<std::uint64_t> updates;
  std::size_t next = 0;
  auto capture_due = [&] {
    while (next < spec.checkpoints.size() && tr.agent().update_count() - base >= spec.checkpoints[next]) {
      auto g = cap.grid(tr, out.schedule, spec.checkpoints[next], base);
      depths.push_back(local_minima_depth(g.z));
      updates.push_back(tr.agent().update_count() - base);
      out.grids.push_back(std::move(g));
      ++next;
    }
  };
  capture_due();
  while (!tr.finished() && (next < spec.checkpoints.size() || spec.run_to_budget)) {
    if (auto rec = tr.step()) out.episodes.push_back(*rec);
    capture_due();
  }
  require(next == spec.checkpoints.size(), ErrorCode::Precondition,
          "training budget ended before checkpoint " + std::to_string(spec.checkpoints[next]) + " of branch " +
              reward::to_string(out.schedule));
  out.depth = make_depth_report(reward::to_string(out.schedule), std::move(updates), std::move(depths));
}

}  // namespace

CrossDensityResult cross_density_run(const CrossDensitySpec& spec, std::uint64_t seed) {
  validate(spec);
  env::Environment env(spec.env);
  auto [kept, switched] = branch_schedules(spec.initial);

  reward::CurriculumSpec change_cur{switched, {spec.transition}, spec.unit, spec.gamma};
  reward::CurriculumSpec keep_cur{kept, {}, spec.unit, spec.gamma};

  auto agent = agents::make_agent(spec.algorithm, spec.agent, env.obs_dim(), env.action_size(),
                                  derive_seed({seed, kAgentStream}));
  agents::Trainer pre(env, std::move(agent), change_cur, spec.budget, derive_seed({seed, kEnvStream}));

  CrossDensityResult result;
  result.seed = seed;
  while (pre.time() < spec.transition) {
    require(!pre.finished(), ErrorCode::Precondition, "training budget ended before the transition");
    if (auto rec = pre.step()) result.pre_transition.push_back(*rec);
  }

  agents::Trainer keep = pre;
  keep.set_curriculum(keep_cur);
  agents::Trainer change = std::move(pre);

  Capture cap{spec, seed, derive_seed({seed, kDirectionStream})};
  result.keep.schedule = kept;
  result.change.schedule = switched;
  run_branch(keep, result.keep, spec, cap);
  run_branch(change, result.change, spec, cap);
  return result;
}

}  // namespace s2d::landscape
