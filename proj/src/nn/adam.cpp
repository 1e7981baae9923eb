#include "nn/adam.hpp"

#include <cmath>

#include "common/error.hpp"

namespace s2d::nn {

AdamState AdamState::for_network(const Network& net, double lr) {
  AdamState s;
  s.m = Vector::Zero(static_cast<Eigen::Index>(net.num_params()));
  s.v = Vector::Zero(static_cast<Eigen::Index>(net.num_params()));
  s.lr = lr;
  return s;
}

void adam_step(Network& net, const Gradients& grads, AdamState& state) {
  const auto n = static_cast<Eigen::Index>(net.num_params());
  require(grads.values.size() == n && state.m.size() == n && state.v.size() == n, ErrorCode::DimensionMismatch,
          "adam_step: gradient/moment shapes do not match the network");
  require(grads.values.allFinite(), ErrorCode::Numeric, "adam_step: non-finite gradient");

  ++state.step;
  const auto& g = grads.values;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * g;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * g.cwiseProduct(g);
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  net.params().array() -=
      state.lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + state.eps);
}

}  // namespace s2d::nn
