#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "wsketch/sketch.hpp"
#include "wsketch/tensor.hpp"

namespace wsketch {

/// How weights are grouped into compression units.
///   uniform  one unit per layer, equal space per unit
///   row      one unit per tensor row
///   layer    one unit per layer, space by layer importance
enum class Granularity : std::uint8_t { kUniform = 0, kRow = 1, kLayer = 2 };

std::string_view to_string(Granularity g) noexcept;
Granularity parse_granularity(std::string_view name);

struct ImportanceProfile {
  Granularity granularity = Granularity::kRow;
  std::vector<double> scores;
  std::uint64_t sample_count = 0;
};

/// Mean squared activation per input channel over an N x d sample matrix
/// (row-major). Throws ContractError when N == 0 or d == 0.
ImportanceProfile activation_importance(std::span<const float> samples, std::size_t sample_count,
                                        std::size_t dim);
/// Same for a 2-D tensor shaped [N, d].
ImportanceProfile activation_importance(const Tensor& activations);

/// Mean of the row scores.
double layer_importance(const ImportanceProfile& rows);

/// Replaces each score with the mean of its quantile bucket, so units fall
/// into a few size classes. Equal scores always share a bucket.
ImportanceProfile bucketize(const ImportanceProfile& profile, std::size_t buckets = 4);

inline constexpr std::uint64_t kDefaultColumnFloor = 16;

struct AllocationPlan {
  std::vector<std::uint64_t> per_unit_columns;
  std::uint64_t total_budget = 0;
  std::uint64_t floor = 0;

  std::uint64_t allocated() const noexcept;
};

/// Splits `total_budget` columns in proportion to `scores`, giving every unit
/// at least `floor`. Units whose share falls under the floor are pinned to it
/// and the rest is re-split; shares are then rounded down, so the plan spends
/// between total_budget - (units - 1) and total_budget columns. All-zero
/// scores are treated as uniform.
/// Throws ContractError when floor * units > total_budget or a score is
/// negative or non-finite.
AllocationPlan allocate_columns(std::span<const double> scores, std::uint64_t total_budget,
                                std::uint64_t floor = kDefaultColumnFloor);

/// Loss of a model given replacement weights for each layer.
using LayerLoss = std::function<double(std::span<const std::vector<float>> layers)>;

/// loss(layers with only `layer_index` sketch-compressed) - loss(layers).
double perturbation_importance(std::span<const std::vector<float>> layers, const LayerLoss& loss,
                               std::size_t layer_index, const SketchConfig& config);

/// A weight kept outside the sketch.
struct Outlier {
  std::uint32_t index = 0;
  float value = 0.0f;

  friend bool operator==(const Outlier&, const Outlier&) = default;
};

struct OutlierSplit {
  /// Sorted by decreasing |value|, ties by lower index.
  std::vector<Outlier> outliers;
  /// Input with outlier positions set to zero.
  std::vector<float> remainder;
};

/// Pulls out the k largest-magnitude weights. Throws ContractError when
/// k > weights.size().
OutlierSplit split_topk_outliers(std::span<const float> weights, std::size_t k);

/// Sketch of `weights` that leaves outlier addresses out of the state.
SketchState compress_with_outliers(std::span<const float> weights,
                                   std::span<const Outlier> outliers, const SketchConfig& config);

/// Retrieval of every address, with outlier positions overwritten by their
/// stored values (outlier addresses are never queried from the sketch).
std::vector<float> reconstruct_with_outliers(const SketchState& state,
                                             std::span<const Outlier> outliers);

}  // namespace wsketch
