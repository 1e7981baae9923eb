#include "harness/experiment.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "agents/policy_loss.hpp"
#include "common/error.hpp"
#include "common/hash.hpp"
#include "common/seeding.hpp"
#include "landscape/cross_density.hpp"
#include "sharpness/sharpness.hpp"

namespace s2d::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Stream tags shared with the cross-density protocol so its pre-transition phase matches plain training.
constexpr std::uint64_t kAgentStream = 0xa6e7;
constexpr std::uint64_t kEnvStream = 0xe7f;
constexpr std::uint64_t kFinalEvalStream = 0xf1a1;

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + p.string());
  out << text;
  require(static_cast<bool>(out), ErrorCode::Io, "write failed: " + p.string());
}

int severity(ErrorCode c) {
  switch (c) {
    case ErrorCode::Numeric:
    case ErrorCode::GridRejected: return 3;
    case ErrorCode::Validation:
    case ErrorCode::InvalidSpec: return 2;
    default: return 1;
  }
}

struct SeedJob {
  const ExperimentConfig& cfg;
  fs::path run_dir;
  bool train;
  bool cross;

  void record(SeedStatus& st, const fs::path& file) const {
    st.artifacts[fs::relative(file, run_dir).generic_string()] = file_hash(file.string());
  }

  std::string sharpness_row(std::uint64_t seed, const sharpness::SharpnessResult& s) const {
    std::ostringstream o;
    o << cfg.run_id << ',' << seed << ',' << env_name() << ',' << reward::to_string(cfg.schedule) << ','
      << format_double(cfg.sharpness.cfg.rho) << ',' << format_double(cfg.sharpness.cfg.p) << ','
      << format_double(s.sharpness) << ',' << (s.degenerate ? 1 : 0) << '\n';
    return o.str();
  }

  std::string env_name() const {
    if (const auto* g = std::get_if<env::GridworldSpec>(&cfg.env))
      return "gridworld_" + std::to_string(g->width) + "x" + std::to_string(g->height) +
             (g->goal_mode == env::GoalMode::Fixed ? "_fixed" : "_random");
    return "point_reacher";
  }

  void run(std::uint64_t seed, SeedStatus& st, std::string& sharp_row, const LogFn& log) const {
    const fs::path dir = run_dir / ("seed_" + std::to_string(seed));
    fs::create_directories(dir);
    if (train) train_seed(seed, dir, st, sharp_row, log);
    if (cross) cross_seed(seed, dir, st, log);
  }

  void train_seed(std::uint64_t seed, const fs::path& dir, SeedStatus& st, std::string& sharp_row,
                  const LogFn& log) const {
    env::Environment env(cfg.env);
    auto agent = agents::make_agent(cfg.algorithm, cfg.agent, env.obs_dim(), env.action_size(),
                                    derive_seed({seed, kAgentStream}));
    agents::Trainer tr(env, std::move(agent), curriculum_of(cfg), cfg.budget, derive_seed({seed, kEnvStream}));
    std::string metrics = metrics_header();
    tr.run([&](const agents::EpisodeRecord& r) { metrics += metrics_row(cfg.run_id, seed, r); });
    write_text(dir / "metrics.csv", metrics);
    record(st, dir / "metrics.csv");
    if (log) log("seed " + std::to_string(seed) + ": trained " + std::to_string(tr.episodes_done()) + " episodes");

    auto snap = tr.agent().snapshot();
    if (cfg.save_snapshots) {
      agents::save_snapshot(snap, (dir / "snapshot.json").string());
      record(st, dir / "snapshot.json");
    }
    if (tr.agent().buffer().empty()) return;
    auto batch = tr.agent().buffer().deterministic_batch(cfg.sharpness.cfg.batch_size);
    write_text(dir / "batch.json", agents::to_json(batch).dump() + "\n");
    record(st, dir / "batch.json");
    if (cfg.sharpness.enabled) {
      agents::PolicyLossEvaluator eval(snap, batch, derive_seed({seed, kFinalEvalStream}));
      auto s = sharpness::agent_sharpness(eval, cfg.sharpness.cfg);
      sharp_row = sharpness_row(seed, s);
      write_text(dir / "sharpness.csv", "run_id,seed,env,schedule,rho,p,sharpness,degenerate_flag\n" + sharp_row);
      record(st, dir / "sharpness.csv");
    }
  }

  void cross_seed(std::uint64_t seed, const fs::path& dir, SeedStatus& st, const LogFn& log) const {
    landscape::CrossDensitySpec spec;
    spec.env = cfg.env;
    spec.algorithm = cfg.algorithm;
    spec.agent = cfg.agent;
    spec.initial = cfg.cross_density.initial;
    spec.transition = resolved_transitions(cfg).front();
    spec.unit = cfg.unit;
    spec.gamma = cfg.gamma;
    spec.budget = cfg.budget;
    spec.checkpoints = cfg.cross_density.checkpoints;
    spec.run_to_budget = cfg.cross_density.run_to_budget;
    spec.grid = cfg.cross_density.grid;
    spec.batch_size = cfg.cross_density.batch_size;
    spec.threads = cfg.grid_threads;
    spec.run_id = cfg.run_id;
    auto res = landscape::cross_density_run(spec, seed);
    for (const auto* b : {&res.keep, &res.change}) {
      const std::string name = reward::to_string(b->schedule);
      for (const auto& g : b->grids) {
        auto p = dir / ("landscape_" + name + "_" + g.metadata.at("checkpoint") + ".csv");
        landscape::write_grid_csv(g, p.string());
        record(st, p);
      }
      auto p = dir / ("depth_" + name + ".json");
      write_text(p, landscape::to_json(b->depth).dump(2) + "\n");
      record(st, p);
      std::string m = metrics_header();
      for (const auto& r : res.pre_transition) m += metrics_row(cfg.run_id, seed, r);
      for (const auto& r : b->episodes) m += metrics_row(cfg.run_id, seed, r);
      auto mp = dir / ("branch_metrics_" + name + ".csv");
      write_text(mp, m);
      record(st, mp);
      if (log)
        log("seed " + std::to_string(seed) + ": " + name + " mean depth " + format_double(b->depth.mean_depth()));
    }
  }
};

ExperimentResult execute(const ExperimentConfig& cfg, bool train, bool cross, const LogFn& log) {
  validate(cfg);
  ExperimentResult result;
  const fs::path run_dir = fs::path(cfg.output_dir) / cfg.run_id;
  fs::create_directories(run_dir);
  result.run_dir = run_dir.string();
  SeedJob job{cfg, run_dir, train, cross};

  const std::size_t n = cfg.seeds.size();
  result.seeds.resize(n);
  std::vector<std::string> sharp_rows(n);
  std::mutex log_mu;
  LogFn safe_log;
  if (log) safe_log = [&](const std::string& m) {
    std::lock_guard lock(log_mu);
    log(m);
  };
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < n; k = next++) {
      auto& st = result.seeds[k];
      st.seed = cfg.seeds[k];
      try {
        job.run(st.seed, st, sharp_rows[k], safe_log);
        st.ok = true;
      } catch (const Error& e) {
        st.error_code = to_string(e.code());
        st.error = e.what();
      } catch (const std::exception& e) {
        st.error_code = "internal";
        st.error = e.what();
      }
      if (!st.ok && safe_log) safe_log("seed " + std::to_string(st.seed) + " failed: " + st.error);
    }
  };
  unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  json manifest;
  manifest["manifest_version"] = 1;
  manifest["code_version"] = kCodeVersion;
  manifest["run_id"] = cfg.run_id;
  manifest["mode"] = train && cross ? "train+cross_density" : (train ? "train" : "cross_density");
  manifest["config"] = to_json(cfg);
  manifest["config_hash"] = hex64(config_hash(cfg));
  manifest["resolved_transitions"] = resolved_transitions(cfg);
  manifest["seeds"] = json::array();
  std::string sharp_all = "run_id,seed,env,schedule,rho,p,sharpness,degenerate_flag\n";
  for (std::size_t k = 0; k < n; ++k) {
    const auto& st = result.seeds[k];
    json s = {{"seed", st.seed}, {"status", st.ok ? "ok" : "failed"}, {"artifacts", st.artifacts}};
    if (!st.ok) s["error"] = {{"code", st.error_code}, {"message", st.error}};
    manifest["seeds"].push_back(std::move(s));
    sharp_all += sharp_rows[k];
  }
  if (train && cfg.sharpness.enabled) {
    write_text(run_dir / "sharpness.csv", sharp_all);
    manifest["sharpness_csv"] = file_hash((run_dir / "sharpness.csv").string());
  }
  write_text(run_dir / "manifest.json", manifest.dump(2) + "\n");
  result.manifest = std::move(manifest);
  return result;
}

}  // namespace

bool ExperimentResult::all_ok() const {
  for (const auto& s : seeds)
    if (!s.ok) return false;
  return true;
}

std::optional<ErrorCode> ExperimentResult::worst_error() const {
  std::optional<ErrorCode> worst;
  for (const auto& s : seeds) {
    if (s.ok) continue;
    ErrorCode c = ErrorCode::ContractViolation;
    for (auto k : {ErrorCode::InvalidSpec, ErrorCode::DimensionMismatch, ErrorCode::Numeric, ErrorCode::Precondition,
                   ErrorCode::Unsupported, ErrorCode::ContractViolation, ErrorCode::GridRejected,
                   ErrorCode::Validation, ErrorCode::Io})
      if (s.error_code == to_string(k)) c = k;
    if (!worst || severity(c) > severity(*worst)) worst = c;
  }
  return worst;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const LogFn& log) {
  return execute(cfg, true, cfg.cross_density.enabled, log);
}

ExperimentResult run_cross_density(const ExperimentConfig& cfg, const LogFn& log) {
  require(!resolved_transitions(cfg).empty() || !cfg.transitions.empty() || !cfg.transition_preset.empty(),
          ErrorCode::Validation, "cross-density needs a transition time");
  ExperimentConfig c = cfg;
  c.cross_density.enabled = true;
  return execute(c, false, true, log);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string metrics_header() {
  return "run_id,seed,episode,env_step,stage,return,success,loss_main,epsilon_or_entropy\n";
}

std::string metrics_row(const std::string& run_id, std::uint64_t seed, const agents::EpisodeRecord& r) {
  return run_id + "," + std::to_string(seed) + "," + std::to_string(r.episode) + "," + std::to_string(r.env_step) +
         "," + std::to_string(r.stage) + "," + format_double(r.ret) + "," + (r.success ? "1" : "0") + "," +
         format_double(r.loss_main) + "," + format_double(r.exploration) + "\n";
}

std::string file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return hex64(fnv1a(ss.str()));
}

}  // namespace s2d::harness
