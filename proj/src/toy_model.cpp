#include "wsketch/toy_model.hpp"

#include <cmath>

#include "wsketch/error.hpp"

namespace wsketch {
namespace {

Matrix gaussian(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double stddev) {
  std::normal_distribution<double> n(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

}  // namespace

ToyModel::ToyModel(const ToyModelConfig& c) {
  if (c.input_dim == 0 || c.hidden == 0 || c.output_dim == 0) {
    throw ContractError("toy model dimensions must be positive");
  }
  std::mt19937_64 rng(c.seed);
  const std::size_t dims[] = {c.input_dim, c.hidden, c.hidden, c.output_dim};
  for (std::size_t l = 0; l < 3; ++l) {
    const double gain = l == 1 ? c.hidden_gain : 1.0;
    layers_.push_back({gaussian(rng, dims[l + 1], dims[l], gain / std::sqrt(double(dims[l]))),
                       Vector::Zero(static_cast<Eigen::Index>(dims[l + 1]))});
  }
}

ToyModel::ToyModel(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ContractError("toy model needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].bias.size() != layers_[l].weight.rows() ||
        (l > 0 && layers_[l].weight.cols() != layers_[l - 1].weight.rows())) {
      throw ContractError("toy model layer shapes do not chain");
    }
  }
}

Matrix ToyModel::forward(const Matrix& inputs) const {
  Matrix a = inputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Matrix z = a * layers_[l].weight.transpose();
    z.rowwise() += layers_[l].bias.transpose();
    a = (l + 1 < layers_.size()) ? Matrix(z.array().tanh()) : z;
  }
  return a;
}

double ToyModel::loss(const Batch& batch) const {
  const Matrix diff = forward(batch.inputs) - batch.targets;
  return 0.5 * diff.squaredNorm() / static_cast<double>(batch.inputs.rows());
}

Gradients ToyModel::loss_and_gradients(const Batch& batch) const {
  const std::size_t depth = layers_.size();
  std::vector<Matrix> acts;  // acts[l] is the input to layer l
  acts.reserve(depth + 1);
  acts.push_back(batch.inputs);
  for (std::size_t l = 0; l < depth; ++l) {
    Matrix z = acts.back() * layers_[l].weight.transpose();
    z.rowwise() += layers_[l].bias.transpose();
    acts.push_back(l + 1 < depth ? Matrix(z.array().tanh()) : z);
  }
  const double n = static_cast<double>(batch.inputs.rows());
  Matrix delta = acts.back() - batch.targets;

  Gradients g;
  g.loss = 0.5 * delta.squaredNorm() / n;
  g.weight.resize(depth);
  g.bias.resize(depth);
  delta /= n;
  for (std::size_t l = depth; l-- > 0;) {
    g.weight[l] = delta.transpose() * acts[l];
    g.bias[l] = delta.colwise().sum().transpose();
    if (l == 0) break;
    Matrix back = delta * layers_[l].weight;
    delta = back.array() * (1.0 - acts[l].array().square());
  }
  return g;
}

RegressionTask::RegressionTask(const ToyModelConfig& teacher, std::size_t eval_size,
                               std::uint64_t eval_seed)
    : teacher_(teacher) {
  std::mt19937_64 rng(eval_seed);
  eval_ = sample(rng, eval_size);
}

Batch RegressionTask::sample(std::mt19937_64& rng, std::size_t batch_size) const {
  Batch b;
  b.inputs = gaussian(rng, batch_size, input_dim(), 1.0);
  b.targets = teacher_.forward(b.inputs);
  return b;
}

std::size_t RegressionTask::input_dim() const noexcept {
  return static_cast<std::size_t>(teacher_.layers().front().weight.cols());
}

}  // namespace wsketch
