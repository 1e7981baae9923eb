#pragma once

#include <cstdint>

#include "nn/network.hpp"

namespace s2d::nn {

// Two parameter-space directions, flat and shape-congruent with the probed network.
struct DirectionPair {
  Vector x;
  Vector y;
  std::uint64_t gen_seed = 0;
};

/// theta + alpha * x + beta * y as a fresh network; `net` is not modified.
Network perturb(const Network& net, const DirectionPair& dirs, double alpha, double beta);

}  // namespace s2d::nn
