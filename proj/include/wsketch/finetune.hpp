#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "wsketch/error.hpp"
#include "wsketch/sketch.hpp"
#include "wsketch/toy_model.hpp"

namespace wsketch {

enum class TrainMode : std::uint8_t { kSteMultiRow = 0, kAggregatedSingleRow = 1, kUncompressed = 2 };

std::string_view to_string(TrainMode m) noexcept;
/// "ste", "aggregated", "uncompressed".
TrainMode parse_train_mode(std::string_view name);

/// Which layers get sketched and with what state shape. Each layer uses its
/// own hash seed derived from sketch.seed and the layer index.
struct FakeCompressConfig {
  std::vector<std::size_t> layers{1};
  SketchConfig sketch;

  SketchConfig layer_config(std::size_t layer) const;
};

struct FakeCompressResult {
  double loss = 0.0;
  /// One entry per configured layer, in `layers` order.
  std::vector<Matrix> decompressed;
  std::vector<SketchState> states;
};

/// Compresses and immediately decompresses the designated layers, then
/// evaluates the loss of the model running on the decompressed weights.
FakeCompressResult fake_compress_forward(const ToyModel& model, const FakeCompressConfig& config,
                                         const Batch& batch);

/// Copy of `model` with the designated layers replaced.
ToyModel with_layers(const ToyModel& model, std::span<const std::size_t> layers,
                     std::span<const Matrix> weights);

/// Straight-through: the gradient w.r.t. the decompressed weights is used
/// unchanged for the original weights. Throws ContractError on shape mismatch.
Matrix ste_backward(const Matrix& grad_decompressed, const Matrix& original);

/// shared[s] = sum of member_grads[a] over addresses a with mapping[a] == s.
/// Throws ContractError when lengths differ or a slot is out of range.
std::vector<double> aggregated_backward(std::span<const double> member_grads,
                                        std::span<const std::uint64_t> mapping,
                                        std::size_t shared_count);

struct TrainConfig {
  TrainMode mode = TrainMode::kSteMultiRow;
  std::size_t steps = 2000;
  double learning_rate = 1e-2;
  std::size_t batch_size = 64;
  std::uint64_t data_seed = 1;
  FakeCompressConfig compression;
};

struct StepRecord {
  std::size_t step = 0;
  double learning_rate = 0.0;
  /// Training-batch loss of the model the optimizer differentiates.
  double loss = 0.0;
  /// Mean relative error of the compressed layers at this step. STE compares
  /// decompressed against the current trainable weights, the aggregated mode
  /// compares the shared weights against the pre-trained ones.
  double mean_relative_error = 0.0;
  /// Weights whose winning cell differs from the previous step (STE only).
  std::uint64_t binding_changes = 0;
};

struct TrainRun {
  TrainMode mode = TrainMode::kUncompressed;
  std::size_t steps = 0;
  std::vector<StepRecord> history;
  /// Weights that would be deployed: decompressed for STE, expanded shared
  /// vector for aggregated, plain weights otherwise.
  std::vector<DenseLayer> deployed;
  double eval_loss = 0.0;
  double final_relative_error = 0.0;
  /// |decompressed| <= |original| held for every weight at every STE step.
  bool underestimate_held = true;
  std::uint64_t state_elements = 0;
  std::uint64_t total_binding_changes = 0;
};

/// Loss became NaN or infinite.
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t step, double loss);
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// SGD with a learning rate decaying linearly to zero over `steps`.
///   ste_multirow          original weights stay trainable; the designated
///                         layers are fake-compressed every step
///   aggregated_singlerow  the designated layers are replaced by a single-row
///                         shared vector (initialized from the AbsMaxMin state
///                         of `model`) with fixed bindings
///   uncompressed          ordinary training
/// Throws ContractError when steps == 0, DivergenceError on a non-finite loss.
TrainRun train(const ToyModel& model, const RegressionTask& task, const TrainConfig& config);

struct CompressOnlyResult {
  double eval_loss = 0.0;
  double mean_relative_error = 0.0;
};

/// Compress `model` once and evaluate it without further training.
CompressOnlyResult compress_only(const ToyModel& model, const FakeCompressConfig& config,
                                 const Batch& eval);

/// Teacher/student setup shared by the CLI demo and the tests.
struct DemoScenario {
  std::uint64_t seed = 1;
  std::size_t hidden = 64;
  std::size_t pretrain_steps = 3000;
  double pretrain_learning_rate = 0.05;
  std::size_t steps = 2000;
  double learning_rate = 1e-2;
  std::size_t batch_size = 64;
  std::size_t eval_size = 1024;
  double rate = 0.5;
  std::uint32_t ste_rows = kDefaultRows;
};

struct DemoSetup {
  RegressionTask task;
  ToyModel pretrained;
  /// Same state element count: rows * c for STE, 1 * rows * c for aggregated.
  FakeCompressConfig ste;
  FakeCompressConfig aggregated;
};

DemoSetup prepare_demo(const DemoScenario& scenario);
TrainConfig demo_train_config(const DemoScenario& scenario, const DemoSetup& setup, TrainMode mode);

}  // namespace wsketch
