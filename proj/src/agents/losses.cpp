#include "agents/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "common/error.hpp"

namespace s2d::agents {

namespace {

int action_index(const Batch& b, Eigen::Index i, Eigen::Index num_actions) {
  auto a = static_cast<Eigen::Index>(std::lround(b.actions(0, i)));
  require(a >= 0 && a < num_actions, ErrorCode::DimensionMismatch, "discrete action index out of range");
  return static_cast<int>(a);
}

void check_finite(double v, const char* what) {
  require(std::isfinite(v), ErrorCode::Numeric, std::string("non-finite ") + what);
}

}  // namespace

// ----- DQN ------------------------------------------------------------------

Vector dqn_targets(const Network& target, const Batch& batch, double gamma) {
  Matrix next_q = target.forward(batch.next_states);
  Vector max_q = next_q.colwise().maxCoeff().transpose();
  return batch.rewards.array() + gamma * (1.0 - batch.dones.array()) * max_q.array();
}

namespace {

nn::OutputLossFn huber_td(const Batch& batch, const Vector& targets) {
  return [&batch, &targets](const Matrix& q) {
    const Eigen::Index n = q.cols();
    nn::OutputLoss out;
    out.grad = Matrix::Zero(q.rows(), n);
    for (Eigen::Index i = 0; i < n; ++i) {
      int a = action_index(batch, i, q.rows());
      double d = q(a, i) - targets[i];
      double ad = std::abs(d);
      out.value += ad < 1.0 ? 0.5 * d * d : ad - 0.5;
      out.grad(a, i) = std::clamp(d, -1.0, 1.0) / static_cast<double>(n);
    }
    out.value /= static_cast<double>(n);
    return out;
  };
}

}  // namespace

double dqn_td_loss(const Network& online, const Batch& batch, const Vector& targets) {
  Matrix q = online.forward(batch.states);
  double v = huber_td(batch, targets)(q).value;
  check_finite(v, "TD loss");
  return v;
}

nn::LossAndGrad dqn_td_loss_and_grad(const Network& online, const Batch& batch, const Vector& targets) {
  return nn::loss_and_grad(online, huber_td(batch, targets), batch.states);
}

// ----- PPO ------------------------------------------------------------------

Matrix log_softmax(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    double m = logits.col(j).maxCoeff();
    double lse = m + std::log((logits.col(j).array() - m).exp().sum());
    out.col(j) = logits.col(j).array() - lse;
  }
  return out;
}

namespace {

struct SurrogateParts {
  double surrogate = 0.0;
  double entropy = 0.0;
  Matrix grad;  // d(surrogate - c * entropy)/dlogits
};

SurrogateParts surrogate_parts(const Matrix& logits, const Batch& batch, double clip, double entropy_coef,
                               bool want_grad) {
  const Eigen::Index n = logits.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  Matrix logp = log_softmax(logits);
  SurrogateParts out;
  if (want_grad) out.grad = Matrix::Zero(logits.rows(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    int a = action_index(batch, i, logits.rows());
    double ratio = std::exp(logp(a, i) - batch.log_probs[i]);
    double adv = batch.advantages[i];
    double s1 = ratio * adv;
    double s2 = std::clamp(ratio, 1.0 - clip, 1.0 + clip) * adv;
    out.surrogate -= std::min(s1, s2) * inv_n;
    Eigen::ArrayXd p = logp.col(i).array().exp();
    double h = -(p * logp.col(i).array()).sum();
    out.entropy += h * inv_n;
    if (!want_grad) continue;
    double dlp = s1 <= s2 ? -ratio * adv * inv_n : 0.0;
    Eigen::ArrayXd g = -dlp * p;
    g[a] += dlp;
    // -c * dH/dlogits, with dH/dl_k = -p_k (log p_k + H)
    g += entropy_coef * inv_n * p * (logp.col(i).array() + h);
    out.grad.col(i) = g.matrix();
  }
  return out;
}

}  // namespace

double ppo_surrogate(const Network& policy, const Batch& batch, double clip) {
  double v = surrogate_parts(policy.forward(batch.states), batch, clip, 0.0, false).surrogate;
  check_finite(v, "PPO surrogate");
  return v;
}

PpoPolicyResult ppo_policy_loss_and_grad(const Network& policy, const Batch& batch, double clip,
                                         double entropy_coef) {
  PpoPolicyResult result;
  auto lg = nn::loss_and_grad(
      policy,
      [&](const Matrix& logits) {
        auto parts = surrogate_parts(logits, batch, clip, entropy_coef, true);
        result.surrogate = parts.surrogate;
        result.entropy = parts.entropy;
        return nn::OutputLoss{parts.surrogate - entropy_coef * parts.entropy, std::move(parts.grad)};
      },
      batch.states);
  result.grads = std::move(lg.grads);
  return result;
}

nn::LossAndGrad ppo_surrogate_and_grad(const Network& policy, const Batch& batch, double clip) {
  return nn::loss_and_grad(
      policy,
      [&](const Matrix& logits) {
        auto parts = surrogate_parts(logits, batch, clip, 0.0, true);
        return nn::OutputLoss{parts.surrogate, std::move(parts.grad)};
      },
      batch.states);
}

nn::LossAndGrad ppo_value_loss_and_grad(const Network& value, const Batch& batch) {
  return nn::loss_and_grad(
      value,
      [&](const Matrix& v) {
        const double n = static_cast<double>(v.cols());
        Matrix diff = v.row(0) - batch.value_targets.transpose();
        return nn::OutputLoss{diff.squaredNorm() / n, 2.0 * diff / n};
      },
      batch.states);
}

// ----- SAC ------------------------------------------------------------------

SquashedSample squashed_sample(const Matrix& policy_out, const Matrix& noise) {
  const Eigen::Index act = noise.rows();
  require(policy_out.rows() == 2 * act && policy_out.cols() == noise.cols(), ErrorCode::DimensionMismatch,
          "policy output does not match the noise shape");
  SquashedSample s;
  s.mean = policy_out.topRows(act);
  Matrix raw = policy_out.bottomRows(act);
  s.log_std = raw.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
  s.clamp_active = ((raw.array() >= kLogStdMin) && (raw.array() <= kLogStdMax)).cast<double>().matrix();
  s.stddev = s.log_std.array().exp().matrix();
  Matrix u = s.mean + s.stddev.cwiseProduct(noise);
  s.actions = u.array().tanh().matrix();
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  Matrix per_dim = (-0.5 * noise.array().square() - s.log_std.array() - half_log_2pi -
                    (1.0 - s.actions.array().square() + kSquashEps).log())
                       .matrix();
  s.log_probs = per_dim.colwise().sum().transpose();
  return s;
}

Matrix q_input(const Matrix& states, const Matrix& actions) {
  Matrix in(states.rows() + actions.rows(), states.cols());
  in.topRows(states.rows()) = states;
  in.bottomRows(actions.rows()) = actions;
  return in;
}

nn::LossAndGrad sac_q_loss_and_grad(const Network& q, const Network& target_value, const Batch& batch,
                                    double gamma) {
  Vector next_v = target_value.forward(batch.next_states).row(0).transpose();
  Vector y = batch.rewards.array() + gamma * (1.0 - batch.dones.array()) * next_v.array();
  return nn::loss_and_grad(
      q,
      [&](const Matrix& out) {
        const double n = static_cast<double>(out.cols());
        Matrix diff = out.row(0) - y.transpose();
        return nn::OutputLoss{diff.squaredNorm() / n, 2.0 * diff / n};
      },
      q_input(batch.states, batch.actions));
}

nn::LossAndGrad sac_value_loss_and_grad(const Network& value, const Network& policy, const Network& q1,
                                        const Network& q2, const Batch& batch, const Matrix& noise, double alpha) {
  auto sample = squashed_sample(policy.forward(batch.states), noise);
  Matrix in = q_input(batch.states, sample.actions);
  Vector qmin = q1.forward(in).row(0).cwiseMin(q2.forward(in).row(0)).transpose();
  Vector target = qmin - alpha * sample.log_probs;
  return nn::loss_and_grad(
      value,
      [&](const Matrix& v) {
        const double n = static_cast<double>(v.cols());
        Matrix diff = v.row(0) - target.transpose();
        return nn::OutputLoss{diff.squaredNorm() / n, 2.0 * diff / n};
      },
      batch.states);
}

nn::LossAndGrad sac_policy_loss_and_grad(const Network& policy, const Network& q1, const Network& q2,
                                         const Batch& batch, const Matrix& noise, double alpha) {
  require(batch.size() > 0, ErrorCode::Precondition, "SAC policy loss needs a nonempty batch");
  const Eigen::Index n = static_cast<Eigen::Index>(batch.size());
  const Eigen::Index act = noise.rows();
  const double inv_n = 1.0 / static_cast<double>(n);

  nn::Tape ptape;
  Matrix pout = policy.forward(batch.states, &ptape);
  require(pout.allFinite(), ErrorCode::Numeric, "non-finite policy output");
  auto s = squashed_sample(pout, noise);

  Matrix in = q_input(batch.states, s.actions);
  nn::Tape t1, t2;
  Matrix v1 = q1.forward(in, &t1);
  Matrix v2 = q2.forward(in, &t2);

  double loss = 0.0;
  Matrix g1 = Matrix::Zero(1, n), g2 = Matrix::Zero(1, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    bool first = v1(0, i) <= v2(0, i);
    double qmin = first ? v1(0, i) : v2(0, i);
    loss += (alpha * s.log_probs[i] - qmin) * inv_n;
    (first ? g1 : g2)(0, i) = -inv_n;
  }
  check_finite(loss, "SAC policy loss");

  Vector scratch1, scratch2;
  Matrix din1 = q1.backward(t1, g1, scratch1);
  Matrix din2 = q2.backward(t2, g2, scratch2);
  Matrix dl_da = din1.bottomRows(act) + din2.bottomRows(act);

  Eigen::ArrayXXd a = s.actions.array();
  Eigen::ArrayXXd one_minus_a2 = 1.0 - a.square();
  Eigen::ArrayXXd dl_du =
      alpha * inv_n * 2.0 * a * one_minus_a2 / (one_minus_a2 + kSquashEps) + dl_da.array() * one_minus_a2;
  Matrix grad_out(2 * act, n);
  grad_out.topRows(act) = dl_du.matrix();
  grad_out.bottomRows(act) =
      ((-alpha * inv_n + dl_du * s.stddev.array() * noise.array()) * s.clamp_active.array()).matrix();

  nn::LossAndGrad result;
  result.loss = loss;
  result.grads.values = Vector::Zero(static_cast<Eigen::Index>(policy.num_params()));
  policy.backward(ptape, grad_out, result.grads.values);
  require(result.grads.values.allFinite(), ErrorCode::Numeric, "non-finite SAC policy gradient");
  return result;
}

double sac_policy_loss(const Network& policy, const Network& q1, const Network& q2, const Batch& batch,
                       const Matrix& noise, double alpha) {
  auto s = squashed_sample(policy.forward(batch.states), noise);
  Matrix in = q_input(batch.states, s.actions);
  Vector qmin = q1.forward(in).row(0).cwiseMin(q2.forward(in).row(0)).transpose();
  double v = (alpha * s.log_probs - qmin).mean();
  check_finite(v, "SAC policy loss");
  return v;
}

}  // namespace s2d::agents
