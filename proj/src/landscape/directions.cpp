#include <cmath>
#include <random>

#include "common/error.hpp"
#include "common/seeding.hpp"
#include "landscape/landscape.hpp"

namespace s2d::landscape {

namespace {

constexpr double kDegenerateRatio = 1e-12;

Eigen::VectorXd gaussian(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (auto& e : v) e = n01(rng);
  return v;
}

Eigen::VectorXd rescaled(const Eigen::VectorXd& r, double target) {
  double n = r.norm();
  if (!(n > 0.0) || !std::isfinite(n) || target == 0.0) return Eigen::VectorXd::Zero(r.size());
  return r * (target / n);
}

}  // namespace

DirectionDraws draw_directions(const nn::Network& net, std::uint64_t gen_seed) {
  DirectionDraws d;
  d.gen_seed = gen_seed;
  for (std::size_t b = 0; b < net.num_blocks(); ++b) {
    std::mt19937_64 rng(derive_seed({gen_seed, b}));
    const std::size_t n = net.block(b).size;
    Eigen::VectorXd r = gaussian(n, rng);
    Eigen::VectorXd r2 = gaussian(n, rng);
    const double raw = r.norm();
    const double r2sq = r2.squaredNorm();
    if (r2sq > 0.0) r -= (r.dot(r2) / r2sq) * r2;
    if (r.norm() <= kDegenerateRatio * raw) r.setZero();
    d.first.push_back(std::move(r));
    d.second.push_back(std::move(r2));
  }
  return d;
}

DirectionPair DirectionDraws::normalize(const nn::Network& net) const {
  DirectionPair p;
  p.gen_seed = gen_seed;
  p.x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.num_params()));
  p.y = p.x;
  require(first.size() == net.num_blocks(), ErrorCode::DimensionMismatch, "direction draws do not match the network");
  for (std::size_t b = 0; b < net.num_blocks(); ++b) {
    auto r = net.block(b);
    const auto off = static_cast<Eigen::Index>(r.offset), len = static_cast<Eigen::Index>(r.size);
    require(first[b].size() == len, ErrorCode::DimensionMismatch, "direction draws do not match the network");
    const double target = first[b].isZero() ? 0.0 : net.block_values(b).norm();
    p.x.segment(off, len) = rescaled(first[b], target);
    p.y.segment(off, len) = rescaled(second[b], target);
  }
  return p;
}

DirectionPair gen_perpendicular_directions(const nn::Network& net, std::uint64_t gen_seed) {
  return draw_directions(net, gen_seed).normalize(net);
}

}  // namespace s2d::landscape
