#include "nn/perturb.hpp"

#include "common/error.hpp"

namespace s2d::nn {

Network perturb(const Network& net, const DirectionPair& dirs, double alpha, double beta) {
  const auto n = static_cast<Eigen::Index>(net.num_params());
  require(dirs.x.size() == n && dirs.y.size() == n, ErrorCode::DimensionMismatch,
          "perturb: directions are not congruent with the network");
  Network out = net;
  out.params() += alpha * dirs.x + beta * dirs.y;
  return out;
}

}  // namespace s2d::nn
