#include "harness/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "common/error.hpp"

namespace s2d::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(f);
  return out;
}

double to_double(const std::string& s, const std::string& what) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  require(!s.empty() && end && *end == '\0', ErrorCode::Validation, "malformed " + what + ": '" + s + "'");
  return v;
}

std::string fixed(double v, int prec = 4) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  std::string s = buf;
  if (s.find_first_not_of("-0.") == std::string::npos && s[0] == '-') s.erase(0, 1);
  return s;
}

std::string signed_fixed(double v, int prec) {
  std::string s = fixed(v, prec);
  return s[0] == '-' ? s : "+" + s;
}

std::string pad(const std::string& s, std::size_t w) { return s.size() >= w ? s : s + std::string(w - s.size(), ' '); }

}  // namespace

Stat mean_std(const std::vector<double>& v) {
  Stat s;
  s.n = v.size();
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(var / static_cast<double>(v.size()));
  return s;
}

SeedSummary summarize_metrics(const std::string& text, double final_fraction) {
  std::istringstream in(text);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::Validation, "empty metrics.csv");
  auto header = split(line);
  auto col = [&](const char* name) {
    for (std::size_t k = 0; k < header.size(); ++k)
      if (header[k] == name) return k;
    fail(ErrorCode::Validation, std::string("metrics.csv lacks column ") + name);
  };
  const auto c_seed = col("seed"), c_ret = col("return"), c_succ = col("success");
  std::vector<double> rets, succ;
  SeedSummary s;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split(line);
    require(f.size() == header.size(), ErrorCode::Validation, "ragged metrics.csv row");
    s.seed = static_cast<std::uint64_t>(std::stoull(f[c_seed]));
    rets.push_back(to_double(f[c_ret], "return"));
    succ.push_back(to_double(f[c_succ], "success"));
  }
  require(!rets.empty(), ErrorCode::Validation, "metrics.csv has no episodes");
  const auto n = rets.size();
  const auto k = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(final_fraction * static_cast<double>(n))));
  s.final_return = mean_std({rets.end() - static_cast<std::ptrdiff_t>(k), rets.end()}).mean;
  s.final_success = mean_std({succ.end() - static_cast<std::ptrdiff_t>(k), succ.end()}).mean;
  return s;
}

RunSummary load_run_summary(const std::string& run_dir) {
  const fs::path dir(run_dir);
  json manifest;
  try {
    manifest = json::parse(slurp(dir / "manifest.json"));
  } catch (const json::exception& e) {
    fail(ErrorCode::Validation, run_dir + "/manifest.json: " + e.what());
  }
  RunSummary r;
  try {
    r.run_id = manifest.at("run_id").get<std::string>();
    const auto& cfg = manifest.at("config");
    r.env_key = cfg.at("env").dump();
    r.schedule = cfg.at("schedule").get<std::string>();
    const auto& ts = manifest.at("resolved_transitions");
    if ((r.schedule == "S2D" || r.schedule == "D2S") && !ts.empty()) {
      r.schedule += "@";
      for (std::size_t k = 0; k < ts.size(); ++k) r.schedule += (k ? "/" : "") + std::to_string(ts[k].get<std::uint64_t>());
    }
    for (const auto& s : manifest.at("seeds")) {
      if (s.at("status") != "ok") continue;
      const auto seed = s.at("seed").get<std::uint64_t>();
      const fs::path sd = dir / ("seed_" + std::to_string(seed));
      if (fs::exists(sd / "metrics.csv")) {
        auto sum = summarize_metrics(slurp(sd / "metrics.csv"));
        sum.seed = seed;
        if (fs::exists(sd / "sharpness.csv")) {
          std::istringstream in(slurp(sd / "sharpness.csv"));
          std::string line;
          std::getline(in, line);
          auto header = split(line);
          if (std::getline(in, line)) {
            auto f = split(line);
            for (std::size_t k = 0; k < header.size() && k < f.size(); ++k)
              if (header[k] == "sharpness") sum.sharpness = to_double(f[k], "sharpness");
          }
        }
        r.seeds.push_back(sum);
      }
      if (fs::exists(sd)) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(sd)) files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& p : files) {
          const auto name = p.filename().string();
          if (name.rfind("depth_", 0) != 0 || p.extension() != ".json") continue;
          auto rep = landscape::depth_report_from_json(json::parse(slurp(p)));
          r.depth[rep.label].push_back(std::move(rep));
        }
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::Validation, run_dir + ": malformed manifest: " + e.what());
  }
  return r;
}

Report compare_report(const std::vector<RunSummary>& runs) {
  require(runs.size() >= 2, ErrorCode::Validation, "a comparison needs at least two runs");
  for (const auto& r : runs)
    require(r.env_key == runs.front().env_key, ErrorCode::Validation,
            "runs " + runs.front().run_id + " and " + r.run_id + " use different environments");

  std::vector<std::string> order;
  std::map<std::string, std::vector<const RunSummary*>> groups;
  for (const auto& r : runs) {
    if (!groups.count(r.schedule)) order.push_back(r.schedule);
    groups[r.schedule].push_back(&r);
  }

  Report rep;
  json& j = rep.json;
  j["env"] = json::parse(runs.front().env_key, nullptr, false);
  j["schedules"] = json::array();
  std::ostringstream t;
  t << pad("schedule", 16) << pad("seeds", 7) << pad("final return", 22) << pad("success rate", 22) << "sharpness\n";
  auto pm = [](const Stat& s) { return s.n == 0 ? std::string("-") : fixed(s.mean) + " +- " + fixed(s.std); };
  for (const auto& name : order) {
    std::vector<double> ret, succ, sharp;
    for (const auto* r : groups[name])
      for (const auto& s : r->seeds) {
        ret.push_back(s.final_return);
        succ.push_back(s.final_success);
        if (s.sharpness) sharp.push_back(*s.sharpness);
      }
    auto sr = mean_std(ret), ss = mean_std(succ), sh = mean_std(sharp);
    json e = {{"schedule", name},
              {"seeds", sr.n},
              {"final_return", {{"mean", sr.mean}, {"std", sr.std}}},
              {"success_rate", {{"mean", ss.mean}, {"std", ss.std}}}};
    if (sh.n) e["sharpness"] = {{"mean", sh.mean}, {"std", sh.std}, {"n", sh.n}};
    j["schedules"].push_back(std::move(e));
    t << pad(name, 16) << pad(std::to_string(sr.n), 7) << pad(pm(sr), 22) << pad(pm(ss), 22)
      << (sh.n ? pm(sh) : std::string("-")) << "\n";
  }

  j["depth"] = json::array();
  bool header = false;
  for (const auto& r : runs) {
    for (const auto& [label, reports] : r.depth) {
      if (reports.empty()) continue;
      const auto phases = reports.front().depths.size();
      std::vector<double> mean(phases, 0.0);
      std::vector<std::uint64_t> updates = reports.front().updates;
      for (const auto& d : reports) {
        require(d.depths.size() == phases, ErrorCode::Validation, "depth reports of " + label + " disagree on phases");
        for (std::size_t k = 0; k < phases; ++k) mean[k] += d.depths[k] / static_cast<double>(reports.size());
      }
      auto agg = landscape::make_depth_report(label, updates, mean);
      json e = landscape::to_json(agg);
      e["run_id"] = r.run_id;
      e["seeds"] = reports.size();
      j["depth"].push_back(std::move(e));
      if (!header) {
        t << "\ndepth of local minima by phase (mean over seeds; delta vs previous phase)\n";
        header = true;
      }
      t << pad(r.run_id + "/" + label, 28);
      for (std::size_t k = 0; k < phases; ++k) {
        t << agg.phases[k] << "=" << fixed(agg.depths[k], 3);
        if (k > 0) t << " (" << signed_fixed(agg.deltas[k - 1], 3) << ")";
        t << "  ";
      }
      t << "\n";
    }
  }
  rep.text = t.str();
  return rep;
}

}  // namespace s2d::harness
