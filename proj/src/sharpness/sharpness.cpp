#include "sharpness/sharpness.hpp"

#include <cmath>

#include "common/error.hpp"

namespace s2d::sharpness {

void validate(const SharpnessConfig& cfg) {
  require(cfg.rho > 0 && std::isfinite(cfg.rho), ErrorCode::InvalidSpec, "sharpness rho must be positive");
  require(cfg.p > 1 && std::isfinite(cfg.p), ErrorCode::InvalidSpec, "sharpness p must exceed 1");
  require(cfg.batch_size > 0, ErrorCode::InvalidSpec, "sharpness batch size must be positive");
}

Eigen::VectorXd ascent_step(const Eigen::VectorXd& g, const SharpnessConfig& cfg) {
  const double q = cfg.q();
  Eigen::ArrayXd mag = g.array().abs().pow(q - 1.0);
  const double norm_q_q = g.array().abs().pow(q).sum();
  if (!(norm_q_q > 0.0)) return Eigen::VectorXd::Zero(g.size());
  return (cfg.rho * g.array().sign() * mag / std::pow(norm_q_q, 1.0 / cfg.p)).matrix();
}

SharpnessResult sharpness(const Eigen::VectorXd& theta, const LossFn& loss, const GradFn& grad,
                          const SharpnessConfig& cfg) {
  validate(cfg);
  SharpnessResult r;
  r.loss = loss(theta);
  Eigen::VectorXd g = grad(theta);
  require(g.size() == theta.size(), ErrorCode::DimensionMismatch, "gradient does not match parameters");
  require(g.allFinite() && std::isfinite(r.loss), ErrorCode::Numeric, "non-finite loss or gradient");
  r.grad_norm = g.norm();
  if (r.grad_norm == 0.0) {
    r.degenerate = true;
    r.perturbed_loss = r.loss;
    r.epsilon = Eigen::VectorXd::Zero(theta.size());
    return r;
  }
  r.epsilon = ascent_step(g, cfg);
  r.perturbed_loss = loss(theta + r.epsilon);
  require(std::isfinite(r.perturbed_loss), ErrorCode::Numeric, "non-finite perturbed loss");
  r.sharpness = r.perturbed_loss - r.loss;
  return r;
}

SharpnessResult agent_sharpness(const agents::PolicyLossEvaluator& eval, const SharpnessConfig& cfg) {
  nn::Network probe = eval.base();
  auto at = [&](const Eigen::VectorXd& theta) -> nn::Network& {
    probe.params() = theta;
    return probe;
  };
  return sharpness(
      eval.base().params(), [&](const Eigen::VectorXd& t) { return eval(at(t)); },
      [&](const Eigen::VectorXd& t) { return eval.with_grad(at(t)).grads.values; }, cfg);
}

}  // namespace s2d::sharpness
