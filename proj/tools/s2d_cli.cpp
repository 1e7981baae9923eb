#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "s2d/s2d.h"

namespace {

int exit_code(s2d_status s) {
  switch (s) {
    case S2D_OK: return 0;
    case S2D_ERR_VALIDATION:
    case S2D_ERR_INVALID_SPEC: return 2;
    case S2D_ERR_NUMERIC:
    case S2D_ERR_GRID_REJECTED: return 3;
    default: return 1;
  }
}

int report_failure(s2d_status s) {
  std::cerr << "error (" << s2d_status_name(s) << "): " << s2d_last_error() << "\n";
  return exit_code(s);
}

struct Owned {
  char* p = nullptr;
  ~Owned() { s2d_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

bool write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  return static_cast<bool>(out);
}

std::string json_string(const std::string& s) {
  std::string o = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') o += '\\';
    o += c;
  }
  return o + "\"";
}

template <class T>
std::string json_list(const std::vector<T>& v) {
  std::string o = "[";
  for (std::size_t i = 0; i < v.size(); ++i) o += (i ? "," : "") + std::to_string(v[i]);
  return o + "]";
}

// Flags that mirror experiment config fields; each one becomes a field override.
struct ExperimentFlags {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::string> run_id, algorithm, schedule, unit, output_dir, transitions_preset, initial;
  std::vector<std::uint64_t> transitions, seeds, checkpoints;
  std::optional<std::uint64_t> budget, threads, grid_threads, steps;
  std::optional<double> gamma, half_range;
  bool quiet = false;

  void add(CLI::App* app, bool cross) {
    app->add_option("-c,--config", config, "experiment config (JSON)")->check(CLI::ExistingFile);
    app->add_option("--set", sets, "field override path=json, e.g. agent.lr=0.001")->take_all();
    app->add_option("--run-id", run_id);
    app->add_option("--algorithm", algorithm)->check(CLI::IsMember({"dqn", "ppo", "sac"}));
    app->add_option("--schedule", schedule)->check(CLI::IsMember({"S2D", "D2S", "OnlySparse", "OnlyDense"}));
    app->add_option("--unit", unit, "curriculum and budget unit")->check(CLI::IsMember({"episodes", "env_steps"}));
    app->add_option("--budget", budget, "training budget in --unit");
    app->add_option("--transitions", transitions, "explicit transition times")->delimiter(',');
    app->add_option("--preset", transitions_preset, "transition preset")->check(CLI::IsMember({"C1", "C2", "C3"}));
    app->add_option("--gamma", gamma, "shaping discount");
    app->add_option("--seeds", seeds)->delimiter(',');
    app->add_option("-o,--output-dir", output_dir);
    app->add_option("--threads", threads, "seed workers (0 = all cores)");
    app->add_option("--grid-threads", grid_threads, "workers per landscape grid");
    if (cross) {
      app->add_option("--initial", initial)->check(CLI::IsMember({"sparse", "dense"}));
      app->add_option("--checkpoints", checkpoints, "updates after the transition")->delimiter(',');
      app->add_option("--grid-steps", steps);
      app->add_option("--half-range", half_range);
    }
    app->add_flag("-q,--quiet", quiet, "suppress progress messages");
  }

  std::vector<std::pair<std::string, std::string>> overrides() const {
    std::vector<std::pair<std::string, std::string>> o;
    if (run_id) o.emplace_back("run_id", json_string(*run_id));
    if (algorithm) o.emplace_back("algorithm", json_string(*algorithm));
    if (schedule) o.emplace_back("schedule", json_string(*schedule));
    if (unit) {
      o.emplace_back("unit", json_string(*unit));
      o.emplace_back("budget.unit", json_string(*unit));
    }
    if (budget) o.emplace_back("budget.total", std::to_string(*budget));
    if (!transitions.empty()) o.emplace_back("transitions", json_list(transitions));
    if (transitions_preset) o.emplace_back("transitions", json_string(*transitions_preset));
    if (gamma) o.emplace_back("gamma", std::to_string(*gamma));
    if (!seeds.empty()) o.emplace_back("seeds", json_list(seeds));
    if (output_dir) o.emplace_back("output_dir", json_string(*output_dir));
    if (threads) o.emplace_back("threads", std::to_string(*threads));
    if (grid_threads) o.emplace_back("grid_threads", std::to_string(*grid_threads));
    if (initial) o.emplace_back("cross_density.initial", json_string(*initial));
    if (!checkpoints.empty()) o.emplace_back("cross_density.checkpoints", json_list(checkpoints));
    if (steps) o.emplace_back("cross_density.grid.steps", std::to_string(*steps));
    if (half_range) o.emplace_back("cross_density.grid.half_range", std::to_string(*half_range));
    for (const auto& s : sets) {
      auto eq = s.find('=');
      o.emplace_back(s.substr(0, eq), eq == std::string::npos ? "" : s.substr(eq + 1));
    }
    return o;
  }
};

int run_experiment_cmd(const ExperimentFlags& f, bool cross) {
  s2d_experiment* exp = nullptr;
  s2d_status st = f.config.empty() ? s2d_experiment_from_json("{\"version\": 1}", &exp)
                                   : s2d_experiment_from_file(f.config.c_str(), &exp);
  std::unique_ptr<s2d_experiment, decltype(&s2d_experiment_destroy)> guard(exp, s2d_experiment_destroy);
  if (st != S2D_OK) return report_failure(st);
  for (const auto& [path, value] : f.overrides()) {
    st = s2d_experiment_set(exp, path.c_str(), value.c_str());
    if (st != S2D_OK) return report_failure(st);
  }
  if ((st = s2d_experiment_validate(exp)) != S2D_OK) return report_failure(st);
  if (!f.quiet) {
    Owned w;
    s2d_experiment_warnings(exp, &w.p);
    if (w.str() != "[]") std::cerr << "warnings: " << w.str() << "\n";
    s2d_set_log_callback([](const char* m, void*) { std::cerr << m << "\n"; }, nullptr);
  }
  Owned manifest;
  st = cross ? s2d_experiment_cross_density(exp, &manifest.p) : s2d_experiment_train(exp, &manifest.p);
  s2d_set_log_callback(nullptr, nullptr);
  if (manifest.p) std::cout << manifest.str() << "\n";
  return st == S2D_OK ? 0 : report_failure(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse-to-dense reward curriculum toolkit"};
  app.set_version_flag("--version", std::string(s2d_version()));
  app.require_subcommand(1);

  ExperimentFlags train_flags, cross_flags;
  auto* train = app.add_subcommand("train", "train every seed of an experiment and write its artifacts");
  train_flags.add(train, false);
  auto* cross = app.add_subcommand("cross-density", "paired post-transition branches with landscape grids");
  cross_flags.add(cross, true);

  std::string snapshot, batch;
  double rho = 0.02, p = 2.0;
  std::uint64_t eval_seed = 0;
  auto* sharp = app.add_subcommand("sharpness", "sharpness of a saved agent on a saved batch");
  sharp->add_option("--snapshot", snapshot)->required()->check(CLI::ExistingFile);
  sharp->add_option("--batch", batch)->required()->check(CLI::ExistingFile);
  sharp->add_option("--rho", rho)->capture_default_str();
  sharp->add_option("--p", p)->capture_default_str();
  sharp->add_option("--eval-seed", eval_seed)->capture_default_str();

  auto* oracle = app.add_subcommand("oracle", "exact tabular checks");
  oracle->require_subcommand(1);
  std::string env_file, preset = "fixed_goal_4x4";
  double gamma = 0.99, tol = 1e-10;
  auto* pbrs = oracle->add_subcommand("check-pbrs", "support inclusion, policy nesting and the Q-shift identity");
  pbrs->add_option("--env", env_file, "env spec JSON file")->check(CLI::ExistingFile);
  pbrs->add_option("--preset", preset)->check(CLI::IsMember({"fixed_goal_4x4", "random_goal_10x10"}))->capture_default_str();
  pbrs->add_option("--gamma", gamma)->capture_default_str();
  pbrs->add_option("--tol", tol)->capture_default_str();

  std::string csv, svg;
  auto* plot = app.add_subcommand("plot", "render a landscape CSV as SVG");
  plot->add_option("csv", csv)->required()->check(CLI::ExistingFile);
  plot->add_option("-o,--out", svg, "output SVG (default: CSV path with .svg)");

  std::vector<std::string> run_dirs;
  std::string report_json;
  auto* report = app.add_subcommand("report", "compare runs over the same environment");
  report->add_option("runs", run_dirs, "run directories")->required()->check(CLI::ExistingDirectory);
  report->add_option("--json", report_json, "also write the JSON report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (*train) return run_experiment_cmd(train_flags, false);
  if (*cross) return run_experiment_cmd(cross_flags, true);
  if (*sharp) {
    double value = 0.0;
    int degenerate = 0;
    auto st = s2d_sharpness_from_files(snapshot.c_str(), batch.c_str(), rho, p, eval_seed, &value, &degenerate);
    if (st != S2D_OK) return report_failure(st);
    std::printf("sharpness=%.17g degenerate=%d\n", value, degenerate);
    return 0;
  }
  if (*pbrs) {
    std::string env_json;
    if (!env_file.empty()) {
      std::ifstream in(env_file);
      env_json.assign(std::istreambuf_iterator<char>(in), {});
    } else {
      env_json = "{\"kind\": \"gridworld\", \"preset\": \"" + preset + "\"}";
    }
    Owned cert;
    auto st = s2d_check_pbrs(env_json.c_str(), gamma, tol, &cert.p);
    if (st != S2D_OK) return report_failure(st);
    std::cout << cert.str() << "\n";
    return cert.str().find("\"ok\": true") != std::string::npos ? 0 : 1;
  }
  if (*plot) {
    if (svg.empty()) svg = csv.substr(0, csv.rfind('.')) + ".svg";
    auto st = s2d_plot(csv.c_str(), svg.c_str());
    if (st != S2D_OK) return report_failure(st);
    std::cout << svg << "\n";
    return 0;
  }
  if (*report) {
    std::vector<const char*> dirs;
    for (const auto& d : run_dirs) dirs.push_back(d.c_str());
    Owned js, text;
    auto st = s2d_report(dirs.data(), dirs.size(), &js.p, &text.p);
    if (st != S2D_OK) return report_failure(st);
    std::cout << text.str();
    if (!report_json.empty() && !write_file(report_json, js.str() + "\n")) {
      std::cerr << "error: cannot write " << report_json << "\n";
      return 1;
    }
    return 0;
  }
  return 1;
}
