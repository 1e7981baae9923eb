#include "nn/network.hpp"

#include <cmath>
#include <random>
#include <string>

#include "common/error.hpp"

namespace s2d::nn {

namespace {

void check_dims(std::span<const std::size_t> dims) {
  require(dims.size() >= 2, ErrorCode::InvalidSpec, "network needs at least an input and an output dimension");
  for (std::size_t d : dims) require(d > 0, ErrorCode::InvalidSpec, "layer dimensions must be positive");
}

}  // namespace

void Network::layout() {
  blocks_.clear();
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    std::size_t w = dims_[l] * dims_[l + 1];
    blocks_.push_back({offset, w});
    offset += w;
    blocks_.push_back({offset, dims_[l + 1]});
    offset += dims_[l + 1];
  }
}

Network Network::mlp(std::span<const std::size_t> layer_dims, std::uint64_t seed) {
  check_dims(layer_dims);
  Network net;
  net.dims_.assign(layer_dims.begin(), layer_dims.end());
  net.seed_ = seed;
  net.layout();
  net.params_ = Vector::Zero(static_cast<Eigen::Index>(net.blocks_.back().offset + net.blocks_.back().size));

  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    double bound = std::sqrt(6.0 / static_cast<double>(net.dims_[l]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    auto w = net.block_values(2 * l);
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = dist(rng);
  }
  return net;
}

Network Network::from_params(std::vector<std::size_t> layer_dims, Vector params, std::uint64_t seed) {
  check_dims(layer_dims);
  Network net;
  net.dims_ = std::move(layer_dims);
  net.seed_ = seed;
  net.layout();
  std::size_t expected = net.blocks_.back().offset + net.blocks_.back().size;
  require(static_cast<std::size_t>(params.size()) == expected, ErrorCode::DimensionMismatch,
          "parameter count " + std::to_string(params.size()) + " does not match layer shapes (" +
              std::to_string(expected) + ")");
  net.params_ = std::move(params);
  return net;
}

BlockRange Network::block(std::size_t b) const {
  require(b < blocks_.size(), ErrorCode::DimensionMismatch, "block index out of range");
  return blocks_[b];
}

Eigen::Map<const RowMajorMatrix> Network::weights(std::size_t layer) const {
  auto r = block(2 * layer);
  return {params_.data() + r.offset, static_cast<Eigen::Index>(dims_[layer + 1]),
          static_cast<Eigen::Index>(dims_[layer])};
}

Eigen::Map<RowMajorMatrix> Network::weights(std::size_t layer) {
  auto r = block(2 * layer);
  return {params_.data() + r.offset, static_cast<Eigen::Index>(dims_[layer + 1]),
          static_cast<Eigen::Index>(dims_[layer])};
}

Eigen::Map<const Vector> Network::biases(std::size_t layer) const {
  auto r = block(2 * layer + 1);
  return {params_.data() + r.offset, static_cast<Eigen::Index>(r.size)};
}

Eigen::Map<Vector> Network::biases(std::size_t layer) {
  auto r = block(2 * layer + 1);
  return {params_.data() + r.offset, static_cast<Eigen::Index>(r.size)};
}

Vector Network::forward(const Vector& input) const {
  Matrix in = input;
  return forward(in).col(0);
}

Matrix Network::forward(const Matrix& inputs, Tape* tape) const {
  require(!dims_.empty(), ErrorCode::InvalidSpec, "forward on an empty network");
  require(static_cast<std::size_t>(inputs.rows()) == input_dim(), ErrorCode::DimensionMismatch,
          "input dimension " + std::to_string(inputs.rows()) + " != network input dimension " +
              std::to_string(input_dim()));
  if (tape) {
    tape->inputs.clear();
    tape->preactivations.clear();
  }
  Matrix x = inputs;
  for (std::size_t l = 0; l < num_layers(); ++l) {
    Matrix z = weights(l) * x;
    z.colwise() += biases(l);
    if (tape) {
      tape->inputs.push_back(std::move(x));
      tape->preactivations.push_back(z);
    }
    x = (l + 1 < num_layers()) ? Matrix(z.cwiseMax(0.0)) : std::move(z);
  }
  return x;
}

Matrix Network::backward(const Tape& tape, const Matrix& grad_output, Vector& grad) const {
  require(tape.inputs.size() == num_layers(), ErrorCode::ContractViolation, "tape does not match network");
  if (grad.size() != params_.size()) grad = Vector::Zero(params_.size());
  Matrix delta = grad_output;
  for (std::size_t l = num_layers(); l-- > 0;) {
    if (l + 1 < num_layers()) {
      delta = delta.cwiseProduct((tape.preactivations[l].array() > 0.0).cast<double>().matrix());
    }
    auto wr = block(2 * l);
    auto br = block(2 * l + 1);
    Eigen::Map<RowMajorMatrix> gw(grad.data() + wr.offset, static_cast<Eigen::Index>(dims_[l + 1]),
                                  static_cast<Eigen::Index>(dims_[l]));
    gw.noalias() += delta * tape.inputs[l].transpose();
    grad.segment(br.offset, br.size) += delta.rowwise().sum();
    delta = weights(l).transpose() * delta;
  }
  return delta;
}

LossAndGrad loss_and_grad(const Network& net, const OutputLossFn& loss_fn, const Matrix& batch) {
  require(batch.cols() > 0, ErrorCode::Precondition, "loss_and_grad needs a nonempty batch");
  Tape tape;
  Matrix out = net.forward(batch, &tape);
  require(out.allFinite(), ErrorCode::Numeric, "non-finite value in forward pass");
  OutputLoss l = loss_fn(out);
  require(std::isfinite(l.value), ErrorCode::Numeric, "non-finite loss");
  LossAndGrad result;
  result.loss = l.value;
  result.grads.values = Vector::Zero(static_cast<Eigen::Index>(net.num_params()));
  net.backward(tape, l.grad, result.grads.values);
  require(result.grads.values.allFinite(), ErrorCode::Numeric, "non-finite gradient");
  return result;
}

}  // namespace s2d::nn
