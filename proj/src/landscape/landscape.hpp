#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "agents/policy_loss.hpp"
#include "json.hpp"
#include "nn/perturb.hpp"

namespace s2d::landscape {

using nn::DirectionPair;

/// Raw Gaussian draws per parameter block, the first already orthogonalized against the second.
/// Fixed by `gen_seed`; normalize() rescales them to a network's current block norms.
struct DirectionDraws {
  std::vector<Eigen::VectorXd> first;
  std::vector<Eigen::VectorXd> second;
  std::uint64_t gen_seed = 0;

  DirectionPair normalize(const nn::Network& net) const;
};

DirectionDraws draw_directions(const nn::Network& net, std::uint64_t gen_seed);

/// Filter-normalized perpendicular pair: per block b, x_b and y_b are orthogonal with
/// ||x_b|| = ||y_b|| = ||theta_b||. Blocks whose orthogonalized draw vanishes (for example
/// single-element blocks) and zero-norm blocks get zero directions.
DirectionPair gen_perpendicular_directions(const nn::Network& net, std::uint64_t gen_seed);

struct GridSpec {
  double half_range = 10.0;
  std::size_t steps = 50;
};

/// `steps` evenly spaced values over [-half_range, half_range]; the middle value is exactly 0 for odd steps.
std::vector<double> grid_axis(double half_range, std::size_t steps);

struct LandscapeGrid {
  std::vector<double> alphas;
  std::vector<double> betas;
  Eigen::MatrixXd z;  // z(i, j) is the loss at (alphas[i], betas[j])
  std::map<std::string, std::string> metadata;
};

/// z(i, j) = eval(theta + alpha_i x + beta_j y). Cells are evaluated by `threads` workers
/// (0 = hardware concurrency); the result does not depend on the worker count.
/// Throws GridRejected naming the first non-finite cell in row-major order.
LandscapeGrid loss_grid(const agents::PolicyLossEvaluator& eval, const DirectionPair& dirs, const GridSpec& spec,
                        unsigned threads = 0);

/// Mean gap between each strict interior local minimum (8-neighbourhood) and its nearest strict
/// interior local maximum. No minima: 0. Minima but no maxima: global max - global min.
double local_minima_depth(const Eigen::MatrixXd& z);

struct DepthReport {
  std::string label;
  std::vector<std::string> phases;
  std::vector<std::uint64_t> updates;
  std::vector<double> depths;
  std::vector<double> deltas;  // depths[k + 1] - depths[k]

  double mean_depth() const;
};

DepthReport make_depth_report(std::string label, std::vector<std::uint64_t> updates, std::vector<double> depths);
nlohmann::json to_json(const DepthReport& r);
DepthReport depth_report_from_json(const nlohmann::json& j);

void write_grid_csv(const LandscapeGrid& grid, const std::string& path);
std::string grid_csv(const LandscapeGrid& grid);
LandscapeGrid parse_grid_csv(const std::string& text);
LandscapeGrid read_grid_csv(const std::string& path);

}  // namespace s2d::landscape
