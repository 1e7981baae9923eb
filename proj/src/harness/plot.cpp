#include "harness/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "common/error.hpp"

namespace s2d::harness {

namespace {

constexpr double kLeft = 70, kTop = 50, kSide = 500;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s = buf;
  return s == "-0.00" ? "0.00" : s;
}

std::string color(double t) {
  static constexpr std::array<std::array<double, 3>, 5> stops{{{68, 1, 84}, {59, 82, 139}, {33, 145, 140},
                                                              {94, 201, 98}, {253, 231, 37}}};
  t = std::clamp(t, 0.0, 1.0) * 4.0;
  const int k = std::min(3, static_cast<int>(t));
  const double f = t - k;
  char buf[8];
  int rgb[3];
  for (int c = 0; c < 3; ++c) rgb[c] = static_cast<int>(std::lround(stops[k][c] + f * (stops[k + 1][c] - stops[k][c])));
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return buf;
}

std::string escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '&': o += "&amp;"; break;
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '"': o += "&quot;"; break;
      default: o += c;
    }
  }
  return o;
}

// Marching squares over cell centres for one level.
std::string contour_path(const Eigen::MatrixXd& z, double level, double cell) {
  const Eigen::Index n = z.rows(), m = z.cols();
  auto px = [&](double i) { return kLeft + (i + 0.5) * cell; };
  auto py = [&](double j) { return kTop + (static_cast<double>(m) - 1.0 - j + 0.5) * cell; };
  std::string d;
  auto seg = [&](std::array<double, 2> a, std::array<double, 2> b) {
    d += "M" + num(px(a[0])) + " " + num(py(a[1])) + "L" + num(px(b[0])) + " " + num(py(b[1]));
  };
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    for (Eigen::Index j = 0; j + 1 < m; ++j) {
      // corners counter-clockwise: (i,j) (i+1,j) (i+1,j+1) (i,j+1)
      const double v[4] = {z(i, j), z(i + 1, j), z(i + 1, j + 1), z(i, j + 1)};
      const double ci[4] = {0, 1, 1, 0}, cj[4] = {0, 0, 1, 1};
      int mask = 0;
      for (int k = 0; k < 4; ++k)
        if (v[k] > level) mask |= 1 << k;
      if (mask == 0 || mask == 15) continue;
      auto edge = [&](int e) -> std::array<double, 2> {
        const int a = e, b = (e + 1) % 4;
        const double t = (level - v[a]) / (v[b] - v[a]);
        return {static_cast<double>(i) + ci[a] + t * (ci[b] - ci[a]), static_cast<double>(j) + cj[a] + t * (cj[b] - cj[a])};
      };
      std::vector<int> crossed;
      for (int e = 0; e < 4; ++e)
        if (((mask >> e) & 1) != ((mask >> ((e + 1) % 4)) & 1)) crossed.push_back(e);
      if (crossed.size() == 2) {
        seg(edge(crossed[0]), edge(crossed[1]));
      } else {
        // saddle: pair edges according to the centre value
        const bool centre_above = (v[0] + v[1] + v[2] + v[3]) / 4.0 > level;
        const bool corner0_above = mask & 1;
        if (centre_above == corner0_above) {
          seg(edge(0), edge(1));
          seg(edge(2), edge(3));
        } else {
          seg(edge(3), edge(0));
          seg(edge(1), edge(2));
        }
      }
    }
  }
  return d;
}

}  // namespace

std::vector<double> contour_levels(const Eigen::MatrixXd& z, int count) {
  const double lo = z.minCoeff(), hi = z.maxCoeff();
  std::vector<double> levels;
  if (!(hi > lo)) return levels;
  for (int k = 1; k <= count; ++k) levels.push_back(lo + k * (hi - lo) / (count + 1));
  return levels;
}

std::string emit_plot(const landscape::LandscapeGrid& g) {
  require(g.z.size() > 0 && g.z.rows() == static_cast<Eigen::Index>(g.alphas.size()) &&
              g.z.cols() == static_cast<Eigen::Index>(g.betas.size()),
          ErrorCode::Validation, "grid shape does not match its axes");
  require(g.z.allFinite(), ErrorCode::Numeric, "grid contains non-finite values");
  const Eigen::Index n = g.z.rows(), m = g.z.cols();
  const double cell = kSide / static_cast<double>(std::max(n, m));
  const double lo = g.z.minCoeff(), hi = g.z.maxCoeff();

  std::string title = "loss landscape";
  auto meta = [&](const char* k) {
    auto it = g.metadata.find(k);
    return it == g.metadata.end() ? std::string() : it->second;
  };
  if (!meta("schedule").empty()) title = meta("schedule");
  if (!meta("algorithm").empty()) title += " " + meta("algorithm");
  if (!meta("checkpoint").empty()) title += ", " + meta("checkpoint") + " updates after transition";
  if (!meta("seed").empty()) title += ", seed " + meta("seed");

  std::string s;
  s.reserve(static_cast<std::size_t>(n * m) * 90 + 4096);
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"620\" viewBox=\"0 0 640 620\">\n";
  s += "<title>" + escape(title) + "</title>\n";
  s += "<text x=\"320\" y=\"30\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" + escape(title) +
       "</text>\n<g shape-rendering=\"crispEdges\">\n";
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double t = hi > lo ? (g.z(i, j) - lo) / (hi - lo) : 0.5;
      s += "<rect class=\"cell\" x=\"" + num(kLeft + static_cast<double>(i) * cell) + "\" y=\"" +
           num(kTop + static_cast<double>(m - 1 - j) * cell) + "\" width=\"" + num(cell) + "\" height=\"" + num(cell) +
           "\" fill=\"" + color(t) + "\"/>\n";
    }
  }
  s += "</g>\n";
  for (double level : contour_levels(g.z)) {
    auto d = contour_path(g.z, level, cell);
    if (d.empty()) continue;
    s += "<path class=\"contour\" data-level=\"" + num(level) + "\" d=\"" + d +
         "\" fill=\"none\" stroke=\"white\" stroke-width=\"0.8\" stroke-opacity=\"0.8\"/>\n";
  }
  const double right = kLeft + cell * static_cast<double>(n), bottom = kTop + cell * static_cast<double>(m);
  s += "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  auto tick = [&](double v, bool xaxis, const std::vector<double>& axis) {
    const double a0 = axis.front(), a1 = axis.back();
    const double f = a1 > a0 ? (v - a0) / (a1 - a0) : 0.5;
    if (xaxis) {
      const double x = kLeft + cell / 2 + f * (right - kLeft - cell);
      s += "<text x=\"" + num(x) + "\" y=\"" + num(bottom + 18) + "\" text-anchor=\"middle\">" + num(v) + "</text>\n";
    } else {
      const double y = bottom - cell / 2 - f * (bottom - kTop - cell);
      s += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\">" + num(v) + "</text>\n";
    }
  };
  for (double v : {g.alphas.front(), 0.5 * (g.alphas.front() + g.alphas.back()), g.alphas.back()}) tick(v, true, g.alphas);
  for (double v : {g.betas.front(), 0.5 * (g.betas.front() + g.betas.back()), g.betas.back()}) tick(v, false, g.betas);
  s += "<text x=\"" + num((kLeft + right) / 2) + "\" y=\"" + num(bottom + 40) + "\" text-anchor=\"middle\">&#945;</text>\n";
  s += "<text x=\"" + num(kLeft - 45) + "\" y=\"" + num((kTop + bottom) / 2) + "\" text-anchor=\"middle\">&#946;</text>\n";
  s += "<text x=\"" + num(right) + "\" y=\"" + num(bottom + 40) + "\" text-anchor=\"end\">loss " + num(lo) + " .. " +
       num(hi) + "</text>\n</g>\n</svg>\n";
  return s;
}

void emit_plot_file(const std::string& csv_path, const std::string& svg_path) {
  auto svg = emit_plot(landscape::read_grid_csv(csv_path));
  std::ofstream out(svg_path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + svg_path);
  out << svg;
  require(static_cast<bool>(out), ErrorCode::Io, "write failed: " + svg_path);
}

}  // namespace s2d::harness
