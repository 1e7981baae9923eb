#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace s2d::nn {

using Vector = Eigen::VectorXd;
// Batches are column-major with one sample per column.
using Matrix = Eigen::MatrixXd;
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct BlockRange {
  std::size_t offset = 0;
  std::size_t size = 0;
};

// Intermediate values kept by a forward pass for the backward pass.
struct Tape {
  std::vector<Matrix> inputs;       // input to each layer (inputs[0] is the batch)
  std::vector<Matrix> preactivations;
};

/// Dense multilayer perceptron with ReLU hidden layers and a raw (identity) output layer.
///
/// All parameters live in one flat vector. Layer l contributes a weight block
/// (out x in, row-major) followed by a bias block, so block 2l is the weights of
/// layer l and block 2l+1 its biases. Copies are deep and storage-independent.
class Network {
 public:
  Network() = default;

  /// Kaiming-uniform weights (bound sqrt(6/fan_in)), zero biases. Deterministic in `seed`.
  static Network mlp(std::span<const std::size_t> layer_dims, std::uint64_t seed);
  static Network mlp(std::initializer_list<std::size_t> layer_dims, std::uint64_t seed) {
    return mlp(std::span<const std::size_t>(layer_dims.begin(), layer_dims.size()), seed);
  }
  /// Wraps existing parameters; throws if `params` does not match the shapes.
  static Network from_params(std::vector<std::size_t> layer_dims, Vector params, std::uint64_t seed = 0);

  const std::vector<std::size_t>& layer_dims() const noexcept { return dims_; }
  std::size_t num_layers() const noexcept { return dims_.empty() ? 0 : dims_.size() - 1; }
  std::size_t num_blocks() const noexcept { return 2 * num_layers(); }
  std::size_t num_params() const noexcept { return static_cast<std::size_t>(params_.size()); }
  std::size_t input_dim() const noexcept { return dims_.empty() ? 0 : dims_.front(); }
  std::size_t output_dim() const noexcept { return dims_.empty() ? 0 : dims_.back(); }
  std::uint64_t seed() const noexcept { return seed_; }
  const std::string& activation() const noexcept { return activation_; }

  BlockRange block(std::size_t b) const;

  const Vector& params() const noexcept { return params_; }
  Vector& params() noexcept { return params_; }
  auto block_values(std::size_t b) const { auto r = block(b); return params_.segment(r.offset, r.size); }
  auto block_values(std::size_t b) { auto r = block(b); return params_.segment(r.offset, r.size); }

  Eigen::Map<const RowMajorMatrix> weights(std::size_t layer) const;
  Eigen::Map<RowMajorMatrix> weights(std::size_t layer);
  Eigen::Map<const Vector> biases(std::size_t layer) const;
  Eigen::Map<Vector> biases(std::size_t layer);

  Vector forward(const Vector& input) const;
  Matrix forward(const Matrix& inputs, Tape* tape = nullptr) const;

  /// Accumulates dL/dparams into `grad` and returns dL/dinputs.
  Matrix backward(const Tape& tape, const Matrix& grad_output, Vector& grad) const;

  bool same_shape(const Network& other) const noexcept { return dims_ == other.dims_; }
  friend bool operator==(const Network& a, const Network& b) {
    return a.dims_ == b.dims_ && a.params_.size() == b.params_.size() && a.params_ == b.params_;
  }

 private:
  void layout();

  std::vector<std::size_t> dims_;
  std::vector<BlockRange> blocks_;
  Vector params_;
  std::uint64_t seed_ = 0;
  std::string activation_ = "relu";
};

// Parameter gradients, shape-congruent with the owning network's flat parameter vector.
struct Gradients {
  Vector values;
};

struct OutputLoss {
  double value = 0.0;
  Matrix grad;  // dL/doutputs, same shape as the outputs
};
using OutputLossFn = std::function<OutputLoss(const Matrix& outputs)>;

struct LossAndGrad {
  double loss = 0.0;
  Gradients grads;
};

LossAndGrad loss_and_grad(const Network& net, const OutputLossFn& loss_fn, const Matrix& batch);

}  // namespace s2d::nn
