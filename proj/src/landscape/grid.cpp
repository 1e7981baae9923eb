#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "common/error.hpp"
#include "landscape/landscape.hpp"

namespace s2d::landscape {

std::vector<double> grid_axis(double half_range, std::size_t steps) {
  require(steps >= 1, ErrorCode::InvalidSpec, "grid needs at least one step");
  require(half_range >= 0 && std::isfinite(half_range), ErrorCode::InvalidSpec, "grid half range must be finite and >= 0");
  std::vector<double> v(steps, 0.0);
  if (steps == 1) return v;
  const double m = static_cast<double>(steps - 1);
  for (std::size_t k = 0; k < steps; ++k) v[k] = half_range * (2.0 * static_cast<double>(k) - m) / m;
  return v;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

LandscapeGrid loss_grid(const agents::PolicyLossEvaluator& eval, const DirectionPair& dirs, const GridSpec& spec,
                        unsigned threads) {
  const nn::Network& base = eval.base();
  require(dirs.x.size() == base.params().size() && dirs.y.size() == base.params().size(),
          ErrorCode::DimensionMismatch, "directions do not match the probed network");
  LandscapeGrid g;
  g.alphas = grid_axis(spec.half_range, spec.steps);
  g.betas = g.alphas;
  const auto n = static_cast<Eigen::Index>(spec.steps);
  g.z = Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::quiet_NaN());

  const std::size_t cells = spec.steps * spec.steps;
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    nn::Network probe = base;
    for (std::size_t c = next++; c < cells; c = next++) {
      const std::size_t i = c / spec.steps, j = c % spec.steps;
      probe.params() = base.params() + g.alphas[i] * dirs.x + g.betas[j] * dirs.y;
      double v;
      try {
        v = eval(probe);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::Numeric) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
          continue;
        }
        v = std::numeric_limits<double>::quiet_NaN();
      }
      g.z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, cells));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (!std::isfinite(g.z(i, j)))
        fail(ErrorCode::GridRejected, "non-finite loss at alpha=" + fmt(g.alphas[static_cast<std::size_t>(i)]) +
                                          " beta=" + fmt(g.betas[static_cast<std::size_t>(j)]));
  g.metadata["steps"] = std::to_string(spec.steps);
  g.metadata["half_range"] = fmt(spec.half_range);
  return g;
}

// ----- depth ----------------------------------------------------------------

double local_minima_depth(const Eigen::MatrixXd& z) {
  require(z.allFinite(), ErrorCode::Precondition, "depth needs a finite grid");
  struct Pt {
    Eigen::Index i, j;
  };
  std::vector<Pt> minima, maxima;
  for (Eigen::Index i = 1; i + 1 < z.rows(); ++i) {
    for (Eigen::Index j = 1; j + 1 < z.cols(); ++j) {
      bool lo = true, hi = true;
      for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
          if (!di && !dj) continue;
          double nb = z(i + di, j + dj);
          lo = lo && z(i, j) < nb;
          hi = hi && z(i, j) > nb;
        }
      if (lo) minima.push_back({i, j});
      if (hi) maxima.push_back({i, j});
    }
  }
  if (minima.empty()) return 0.0;
  if (maxima.empty()) return z.maxCoeff() - z.minCoeff();
  double total = 0.0;
  for (const auto& m : minima) {
    // maxima are in row-major order, so a strict comparison keeps the lowest linear index on ties
    const Pt* best = nullptr;
    Eigen::Index best_d2 = 0;
    for (const auto& M : maxima) {
      Eigen::Index d2 = (M.i - m.i) * (M.i - m.i) + (M.j - m.j) * (M.j - m.j);
      if (!best || d2 < best_d2) {
        best = &M;
        best_d2 = d2;
      }
    }
    total += z(best->i, best->j) - z(m.i, m.j);
  }
  return total / static_cast<double>(minima.size());
}

double DepthReport::mean_depth() const {
  if (depths.empty()) return 0.0;
  double s = 0.0;
  for (double d : depths) s += d;
  return s / static_cast<double>(depths.size());
}

DepthReport make_depth_report(std::string label, std::vector<std::uint64_t> updates, std::vector<double> depths) {
  require(updates.size() == depths.size(), ErrorCode::DimensionMismatch, "one update count per depth");
  DepthReport r;
  r.label = std::move(label);
  for (std::size_t k = 0; k < depths.size(); ++k) r.phases.push_back("P" + std::to_string(k + 1));
  for (std::size_t k = 1; k < depths.size(); ++k) r.deltas.push_back(depths[k] - depths[k - 1]);
  r.updates = std::move(updates);
  r.depths = std::move(depths);
  return r;
}

nlohmann::json to_json(const DepthReport& r) {
  nlohmann::json j;
  j["label"] = r.label;
  j["phases"] = nlohmann::json::array();
  for (std::size_t k = 0; k < r.depths.size(); ++k)
    j["phases"].push_back({{"phase", r.phases[k]}, {"updates", r.updates[k]}, {"depth", r.depths[k]}});
  j["deltas"] = r.deltas;
  j["mean_depth"] = r.mean_depth();
  return j;
}

DepthReport depth_report_from_json(const nlohmann::json& j) {
  try {
    std::vector<std::uint64_t> updates;
    std::vector<double> depths;
    for (const auto& p : j.at("phases")) {
      updates.push_back(p.at("updates").get<std::uint64_t>());
      depths.push_back(p.at("depth").get<double>());
    }
    return make_depth_report(j.value("label", ""), std::move(updates), std::move(depths));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidSpec, std::string("malformed depth report: ") + e.what());
  }
}

// ----- CSV ------------------------------------------------------------------

std::string grid_csv(const LandscapeGrid& g) {
  std::string out;
  out.reserve(g.alphas.size() * g.betas.size() * 64);
  for (const auto& [k, v] : g.metadata) out += "# " + k + "=" + v + "\n";
  out += "alpha,beta,loss\n";
  for (std::size_t i = 0; i < g.alphas.size(); ++i)
    for (std::size_t j = 0; j < g.betas.size(); ++j)
      out += fmt(g.alphas[i]) + "," + fmt(g.betas[j]) + "," +
             fmt(g.z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) + "\n";
  return out;
}

void write_grid_csv(const LandscapeGrid& grid, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + path);
  out << grid_csv(grid);
  require(static_cast<bool>(out), ErrorCode::Io, "write failed: " + path);
}

LandscapeGrid parse_grid_csv(const std::string& text) {
  LandscapeGrid g;
  std::istringstream in(text);
  std::string line;
  bool header = false;
  std::vector<double> a, b, z;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto body = line.substr(1);
      if (!body.empty() && body[0] == ' ') body.erase(0, 1);
      auto eq = body.find('=');
      require(eq != std::string::npos, ErrorCode::Validation, "line " + std::to_string(lineno) + ": metadata needs key=value");
      g.metadata[body.substr(0, eq)] = body.substr(eq + 1);
      continue;
    }
    if (!header) {
      require(line == "alpha,beta,loss", ErrorCode::Validation, "expected header alpha,beta,loss");
      header = true;
      continue;
    }
    double v[3];
    std::size_t pos = 0;
    for (int k = 0; k < 3; ++k) {
      auto comma = line.find(',', pos);
      require((k < 2) == (comma != std::string::npos), ErrorCode::Validation,
              "line " + std::to_string(lineno) + ": expected three fields");
      std::string field = line.substr(pos, k < 2 ? comma - pos : std::string::npos);
      char* end = nullptr;
      v[k] = std::strtod(field.c_str(), &end);
      require(!field.empty() && end && *end == '\0', ErrorCode::Validation,
              "line " + std::to_string(lineno) + ": not a number: '" + field + "'");
      require(std::isfinite(v[k]), ErrorCode::Numeric, "line " + std::to_string(lineno) + ": non-finite value");
      pos = comma + 1;
    }
    a.push_back(v[0]);
    b.push_back(v[1]);
    z.push_back(v[2]);
  }
  require(header && !z.empty(), ErrorCode::Validation, "grid CSV has no rows");
  auto n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(z.size()))));
  require(n * n == z.size(), ErrorCode::Validation, "grid CSV must hold a square grid");
  g.alphas.resize(n);
  g.betas.resize(n);
  g.z.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    g.alphas[i] = a[i * n];
    g.betas[i] = b[i];
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t k = i * n + j;
      require(a[k] == g.alphas[i] && b[k] == b[j], ErrorCode::Validation, "grid CSV rows are not row-major in alpha then beta");
      g.z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = z[k];
    }
  }
  return g;
}

LandscapeGrid read_grid_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_grid_csv(ss.str());
}

}  // namespace s2d::landscape
