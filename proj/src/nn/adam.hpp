#pragma once

#include <cstdint>

#include "nn/network.hpp"

namespace s2d::nn {

struct AdamState {
  Vector m;
  Vector v;
  std::uint64_t step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState for_network(const Network& net, double lr);
};

/// One bias-corrected Adam update of `net` in place. Throws on non-finite or incongruent gradients.
void adam_step(Network& net, const Gradients& grads, AdamState& state);

}  // namespace s2d::nn
