#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace wsketch {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Fully connected layer, weight is [out, in] row-major.
struct DenseLayer {
  Matrix weight;
  Vector bias;
};

struct ToyModelConfig {
  std::size_t input_dim = 16;
  std::size_t hidden = 64;
  std::size_t output_dim = 1;
  std::uint64_t seed = 1;
  /// Multiplies the initial weights of the hidden-to-hidden layer.
  double hidden_gain = 1.0;
};

struct Batch {
  Matrix inputs;   // [batch, input_dim]
  Matrix targets;  // [batch, output_dim]
};

struct Gradients {
  double loss = 0.0;
  std::vector<Matrix> weight;
  std::vector<Vector> bias;
};

/// input -> tanh(hidden) -> tanh(hidden) -> linear output, trained with
/// 0.5 * mean squared error.
class ToyModel {
 public:
  explicit ToyModel(const ToyModelConfig& config);
  explicit ToyModel(std::vector<DenseLayer> layers);

  Matrix forward(const Matrix& inputs) const;
  double loss(const Batch& batch) const;
  Gradients loss_and_gradients(const Batch& batch) const;

  std::vector<DenseLayer>& layers() noexcept { return layers_; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }

 private:
  std::vector<DenseLayer> layers_;
};

/// Regression against a frozen teacher network of the same architecture.
class RegressionTask {
 public:
  RegressionTask(const ToyModelConfig& teacher, std::size_t eval_size, std::uint64_t eval_seed);

  Batch sample(std::mt19937_64& rng, std::size_t batch_size) const;
  const Batch& eval_set() const noexcept { return eval_; }
  const ToyModel& teacher() const noexcept { return teacher_; }
  std::size_t input_dim() const noexcept;

 private:
  ToyModel teacher_;
  Batch eval_;
};

}  // namespace wsketch
