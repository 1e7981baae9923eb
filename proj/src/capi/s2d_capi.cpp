#include "s2d/s2d.h"

#include <cstring>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>

#include "agents/policy_loss.hpp"
#include "common/error.hpp"
#include "harness/config.hpp"
#include "harness/experiment.hpp"
#include "harness/oracle.hpp"
#include "harness/plot.hpp"
#include "harness/report.hpp"
#include "sharpness/sharpness.hpp"

using nlohmann::json;
using namespace s2d;

struct s2d_experiment {
  json doc;
  std::optional<harness::ExperimentConfig> cfg;
  std::vector<std::string> warnings;

  const harness::ExperimentConfig& config() {
    if (!cfg) {
      warnings.clear();
      cfg = harness::config_from_json(doc, &warnings);
    }
    return *cfg;
  }
};

namespace {

thread_local std::string g_last_error;
std::mutex g_log_mu;
s2d_log_fn g_log_fn = nullptr;
void* g_log_user = nullptr;

s2d_status status_of(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidSpec: return S2D_ERR_INVALID_SPEC;
    case ErrorCode::DimensionMismatch: return S2D_ERR_DIMENSION;
    case ErrorCode::Numeric: return S2D_ERR_NUMERIC;
    case ErrorCode::Precondition: return S2D_ERR_PRECONDITION;
    case ErrorCode::Unsupported: return S2D_ERR_UNSUPPORTED;
    case ErrorCode::ContractViolation: return S2D_ERR_CONTRACT;
    case ErrorCode::GridRejected: return S2D_ERR_GRID_REJECTED;
    case ErrorCode::Validation: return S2D_ERR_VALIDATION;
    case ErrorCode::Io: return S2D_ERR_IO;
  }
  return S2D_ERR_INTERNAL;
}

template <class F>
s2d_status guarded(F&& f) {
  g_last_error.clear();
  try {
    return f();
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return S2D_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return S2D_ERR_INTERNAL;
  }
}

s2d_status null_arg(const char* what) {
  g_last_error = std::string("null argument: ") + what;
  return S2D_ERR_NULL_ARG;
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.data(), s.size() + 1);
  return p;
}

json parse_json(const char* text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::Validation, std::string(what) + " is not valid JSON: " + e.what());
  }
}

harness::LogFn logger() {
  return [](const std::string& m) {
    std::lock_guard lock(g_log_mu);
    if (g_log_fn) g_log_fn(m.c_str(), g_log_user);
  };
}

s2d_status finish_run(const harness::ExperimentResult& r, char** out_manifest) {
  if (out_manifest) *out_manifest = dup(r.manifest.dump(2));
  if (auto worst = r.worst_error()) {
    for (const auto& s : r.seeds)
      if (!s.ok) {
        g_last_error = "seed " + std::to_string(s.seed) + ": " + s.error;
        break;
      }
    return status_of(*worst);
  }
  return S2D_OK;
}

s2d_status make_experiment(json doc, s2d_experiment** out) {
  require(doc.is_object(), ErrorCode::Validation, "config must be a JSON object");
  auto exp = std::make_unique<s2d_experiment>();
  exp->doc = std::move(doc);
  *out = exp.release();
  return S2D_OK;
}

}  // namespace

extern "C" {

const char* s2d_version(void) { return harness::kCodeVersion; }

const char* s2d_status_name(s2d_status s) {
  switch (s) {
    case S2D_OK: return "ok";
    case S2D_ERR_INVALID_SPEC: return "invalid_spec";
    case S2D_ERR_DIMENSION: return "dimension_mismatch";
    case S2D_ERR_NUMERIC: return "numeric";
    case S2D_ERR_PRECONDITION: return "precondition";
    case S2D_ERR_UNSUPPORTED: return "unsupported";
    case S2D_ERR_CONTRACT: return "contract_violation";
    case S2D_ERR_GRID_REJECTED: return "grid_rejected";
    case S2D_ERR_VALIDATION: return "validation";
    case S2D_ERR_IO: return "io";
    case S2D_ERR_NULL_ARG: return "null_argument";
    case S2D_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* s2d_last_error(void) { return g_last_error.c_str(); }

void s2d_string_free(char* s) { std::free(s); }

void s2d_set_log_callback(s2d_log_fn fn, void* user) {
  std::lock_guard lock(g_log_mu);
  g_log_fn = fn;
  g_log_user = user;
}

s2d_status s2d_experiment_from_file(const char* path, s2d_experiment** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  return guarded([&] {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::Io, std::string("cannot read config ") + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return make_experiment(parse_json(ss.str().c_str(), "config"), out);
  });
}

s2d_status s2d_experiment_from_json(const char* text, s2d_experiment** out) {
  if (!text) return null_arg("json");
  if (!out) return null_arg("out");
  return guarded([&] { return make_experiment(parse_json(text, "config"), out); });
}

s2d_status s2d_experiment_set(s2d_experiment* exp, const char* path, const char* json_value) {
  if (!exp) return null_arg("exp");
  if (!path) return null_arg("path");
  if (!json_value) return null_arg("json_value");
  return guarded([&] {
    json doc = exp->doc;
    json value = parse_json(json_value, path);
    json* node = &doc;
    std::string p = path;
    std::size_t start = 0;
    while (true) {
      auto dot = p.find('.', start);
      std::string key = p.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      require(!key.empty(), ErrorCode::Validation, std::string("bad field path ") + path);
      if (!node->is_object()) *node = json::object();
      if (dot == std::string::npos) {
        (*node)[key] = value;
        break;
      }
      node = &(*node)[key];
      start = dot + 1;
    }
    exp->doc = std::move(doc);
    exp->cfg.reset();
    return S2D_OK;
  });
}

s2d_status s2d_experiment_validate(s2d_experiment* exp) {
  if (!exp) return null_arg("exp");
  return guarded([&] {
    exp->config();
    return S2D_OK;
  });
}

s2d_status s2d_experiment_config_json(s2d_experiment* exp, char** out) {
  if (!exp) return null_arg("exp");
  if (!out) return null_arg("out");
  return guarded([&] {
    *out = dup(harness::to_json(exp->config()).dump(2));
    return S2D_OK;
  });
}

s2d_status s2d_experiment_warnings(s2d_experiment* exp, char** out) {
  if (!exp) return null_arg("exp");
  if (!out) return null_arg("out");
  return guarded([&] {
    exp->config();
    *out = dup(json(exp->warnings).dump());
    return S2D_OK;
  });
}

void s2d_experiment_destroy(s2d_experiment* exp) { delete exp; }

s2d_status s2d_experiment_train(s2d_experiment* exp, char** out_manifest) {
  if (!exp) return null_arg("exp");
  return guarded([&] { return finish_run(harness::run_experiment(exp->config(), logger()), out_manifest); });
}

s2d_status s2d_experiment_cross_density(s2d_experiment* exp, char** out_manifest) {
  if (!exp) return null_arg("exp");
  return guarded([&] { return finish_run(harness::run_cross_density(exp->config(), logger()), out_manifest); });
}

s2d_status s2d_sharpness_from_files(const char* snapshot_path, const char* batch_path, double rho, double p,
                                    uint64_t eval_seed, double* out_sharpness, int* out_degenerate) {
  if (!snapshot_path) return null_arg("snapshot_path");
  if (!batch_path) return null_arg("batch_path");
  if (!out_sharpness) return null_arg("out_sharpness");
  return guarded([&] {
    auto snap = agents::load_snapshot(snapshot_path);
    std::ifstream in(batch_path);
    require(static_cast<bool>(in), ErrorCode::Io, std::string("cannot read ") + batch_path);
    std::stringstream ss;
    ss << in.rdbuf();
    auto batch = agents::batch_from_json(parse_json(ss.str().c_str(), "batch"));
    sharpness::SharpnessConfig cfg;
    cfg.rho = rho;
    cfg.p = p;
    agents::PolicyLossEvaluator eval(std::move(snap), std::move(batch), eval_seed);
    auto r = sharpness::agent_sharpness(eval, cfg);
    *out_sharpness = r.sharpness;
    if (out_degenerate) *out_degenerate = r.degenerate ? 1 : 0;
    return S2D_OK;
  });
}

s2d_status s2d_check_pbrs(const char* env_json, double gamma, double tol, char** out) {
  if (!out) return null_arg("out");
  return guarded([&] {
    env::EnvSpec spec = env::GridworldSpec::fixed_goal_4x4();
    if (env_json) spec = harness::env_from_json(parse_json(env_json, "env"));
    *out = dup(harness::check_pbrs(spec, gamma, tol).dump(2));
    return S2D_OK;
  });
}

s2d_status s2d_plot(const char* csv, const char* svg) {
  if (!csv) return null_arg("landscape_csv");
  if (!svg) return null_arg("svg_path");
  return guarded([&] {
    harness::emit_plot_file(csv, svg);
    return S2D_OK;
  });
}

s2d_status s2d_report(const char* const* run_dirs, size_t count, char** out_json, char** out_text) {
  if (!run_dirs && count) return null_arg("run_dirs");
  return guarded([&] {
    std::vector<harness::RunSummary> runs;
    for (size_t k = 0; k < count; ++k) {
      require(run_dirs[k] != nullptr, ErrorCode::Validation, "null run directory");
      runs.push_back(harness::load_run_summary(run_dirs[k]));
    }
    auto rep = harness::compare_report(runs);
    if (out_json) *out_json = dup(rep.json.dump(2));
    if (out_text) *out_text = dup(rep.text);
    return S2D_OK;
  });
}

}  // extern "C"
