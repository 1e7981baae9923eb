#pragma once

#include <functional>

#include <Eigen/Dense>

#include "agents/policy_loss.hpp"

namespace s2d::sharpness {

struct SharpnessConfig {
  double rho = 0.02;
  double p = 2.0;
  std::size_t batch_size = 128;

  double q() const noexcept { return p / (p - 1.0); }  // dual exponent, 1/p + 1/q = 1
};

void validate(const SharpnessConfig& cfg);

struct SharpnessResult {
  double sharpness = 0.0;  // L(theta + eps) - L(theta)
  double loss = 0.0;
  double perturbed_loss = 0.0;
  double grad_norm = 0.0;  // l2
  bool degenerate = false; // zero gradient; sharpness reported as 0
  Eigen::VectorXd epsilon;
};

/// One-step ascent eps = rho * sign(g) |g|^(q-1) / (||g||_q^q)^(1/p).
Eigen::VectorXd ascent_step(const Eigen::VectorXd& grad, const SharpnessConfig& cfg);

using LossFn = std::function<double(const Eigen::VectorXd& theta)>;
using GradFn = std::function<Eigen::VectorXd(const Eigen::VectorXd& theta)>;

SharpnessResult sharpness(const Eigen::VectorXd& theta, const LossFn& loss, const GradFn& grad,
                          const SharpnessConfig& cfg);

/// Sharpness of an agent's landscape objective with respect to its probed network.
SharpnessResult agent_sharpness(const agents::PolicyLossEvaluator& eval, const SharpnessConfig& cfg);

}  // namespace s2d::sharpness
