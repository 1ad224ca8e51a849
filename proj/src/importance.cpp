#include "wsketch/importance.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <string>

#include "wsketch/error.hpp"

namespace wsketch {

std::string_view to_string(Granularity g) noexcept {
  switch (g) {
    case Granularity::kUniform: return "uniform";
    case Granularity::kRow: return "row";
    case Granularity::kLayer: return "layer";
  }
  return "unknown";
}

Granularity parse_granularity(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (auto g : {Granularity::kUniform, Granularity::kRow, Granularity::kLayer}) {
    if (lower == to_string(g)) return g;
  }
  throw ContractError("unknown granularity '" + std::string(name) + "'");
}

ImportanceProfile activation_importance(std::span<const float> samples, std::size_t sample_count,
                                        std::size_t dim) {
  if (sample_count == 0 || dim == 0) throw ContractError("activation samples are empty");
  if (samples.size() != sample_count * dim) {
    throw ContractError("activation sample matrix has the wrong size");
  }
  ImportanceProfile p;
  p.granularity = Granularity::kRow;
  p.sample_count = sample_count;
  p.scores.assign(dim, 0.0);
  for (std::size_t k = 0; k < sample_count; ++k) {
    const float* row = samples.data() + k * dim;
    for (std::size_t j = 0; j < dim; ++j) {
      const double a = row[j];
      p.scores[j] += a * a;
    }
  }
  for (double& s : p.scores) s /= static_cast<double>(sample_count);
  return p;
}

ImportanceProfile activation_importance(const Tensor& activations) {
  if (activations.ndim() != 2) throw ContractError("activations must be a 2-D [N, d] tensor");
  return activation_importance(activations.data, activations.shape[0], activations.shape[1]);
}

double layer_importance(const ImportanceProfile& rows) {
  if (rows.scores.empty()) throw ContractError("layer importance of an empty profile");
  return std::accumulate(rows.scores.begin(), rows.scores.end(), 0.0) /
         static_cast<double>(rows.scores.size());
}

ImportanceProfile bucketize(const ImportanceProfile& profile, std::size_t buckets) {
  if (buckets == 0) throw ContractError("bucket count must be >= 1");
  const std::size_t n = profile.scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](auto a, auto b) { return profile.scores[a] < profile.scores[b]; });
  std::vector<std::size_t> bucket_of(n);
  std::size_t first_equal = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (r > 0 && profile.scores[order[r]] != profile.scores[order[r - 1]]) first_equal = r;
    bucket_of[order[r]] = first_equal * buckets / n;
  }
  std::vector<double> sum(buckets, 0.0);
  std::vector<std::size_t> count(buckets, 0);
  for (std::size_t i = 0; i < n; ++i) {
    sum[bucket_of[i]] += profile.scores[i];
    ++count[bucket_of[i]];
  }
  ImportanceProfile out = profile;
  for (std::size_t i = 0; i < n; ++i) {
    out.scores[i] = sum[bucket_of[i]] / static_cast<double>(count[bucket_of[i]]);
  }
  return out;
}

std::uint64_t AllocationPlan::allocated() const noexcept {
  return std::accumulate(per_unit_columns.begin(), per_unit_columns.end(), std::uint64_t{0});
}

AllocationPlan allocate_columns(std::span<const double> scores, std::uint64_t total_budget,
                                std::uint64_t floor) {
  const std::size_t n = scores.size();
  if (n == 0) throw ContractError("allocation needs at least one unit");
  if (floor > 0 && n > total_budget / floor) {
    throw ContractError("infeasible allocation: floor " + std::to_string(floor) + " x " +
                        std::to_string(n) + " units exceeds budget " +
                        std::to_string(total_budget));
  }
  for (double s : scores) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw ContractError("importance scores must be finite and >= 0");
  }
  std::vector<double> weight(scores.begin(), scores.end());
  if (std::all_of(weight.begin(), weight.end(), [](double s) { return s == 0.0; })) {
    std::fill(weight.begin(), weight.end(), 1.0);
  }

  // Water-fill: units whose proportional share drops under the floor are
  // pinned, the remaining budget is re-split among the others.
  std::vector<bool> pinned(n, false);
  std::vector<double> share(n, 0.0);
  for (;;) {
    double free_weight = 0.0;
    std::uint64_t pinned_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (pinned[i]) ++pinned_count;
      else free_weight += weight[i];
    }
    const double free_budget = static_cast<double>(total_budget - pinned_count * floor);
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (pinned[i]) {
        share[i] = static_cast<double>(floor);
        continue;
      }
      double s = free_weight > 0.0 ? weight[i] / free_weight * free_budget : 0.0;
      // Snap away last-bit noise so that rescaled scores give identical plans.
      s = std::nearbyint(s * 1e6) / 1e6;
      share[i] = s;
      if (s < static_cast<double>(floor)) {
        pinned[i] = true;
        changed = true;
      }
    }
    if (!changed) break;
  }

  // Plain floor rounding: it is monotone in each unit's share, whereas
  // largest-remainder rounding can take a column away from a unit whose score
  // went up. At most n - 1 columns stay unassigned.
  AllocationPlan plan;
  plan.total_budget = total_budget;
  plan.floor = floor;
  plan.per_unit_columns.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    plan.per_unit_columns[i] = pinned[i] ? floor : static_cast<std::uint64_t>(std::floor(share[i]));
  }
  return plan;
}

double perturbation_importance(std::span<const std::vector<float>> layers, const LayerLoss& loss,
                               std::size_t layer_index, const SketchConfig& config) {
  if (layer_index >= layers.size()) {
    throw ContractError("layer index " + std::to_string(layer_index) + " out of range");
  }
  const double base = loss(layers);
  std::vector<std::vector<float>> perturbed(layers.begin(), layers.end());
  const auto& target = layers[layer_index];
  perturbed[layer_index] = decompress_unit(compress_unit(target, config), target.size());
  return loss(perturbed) - base;
}

OutlierSplit split_topk_outliers(std::span<const float> weights, std::size_t k) {
  if (k > weights.size()) throw ContractError("top-k count exceeds the number of weights");
  std::vector<std::uint32_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0u);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::uint32_t a, std::uint32_t b) {
                      const float ma = std::fabs(weights[a]);
                      const float mb = std::fabs(weights[b]);
                      if (ma != mb) return ma > mb;
                      return a < b;
                    });
  OutlierSplit split;
  split.remainder.assign(weights.begin(), weights.end());
  split.outliers.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    split.outliers.push_back({order[i], weights[order[i]]});
    split.remainder[order[i]] = 0.0f;
  }
  return split;
}

SketchState compress_with_outliers(std::span<const float> weights,
                                   std::span<const Outlier> outliers, const SketchConfig& config) {
  std::vector<std::uint64_t> excluded;
  excluded.reserve(outliers.size());
  for (const auto& o : outliers) excluded.push_back(o.index);
  return compress_unit(weights, config, excluded);
}

std::vector<float> reconstruct_with_outliers(const SketchState& state,
                                             std::span<const Outlier> outliers) {
  const std::uint64_t n = state.weight_count();
  std::vector<std::uint8_t> is_outlier(n, 0);
  std::vector<float> out(n);
  for (const auto& o : outliers) {
    if (o.index >= n) throw ContractError("outlier index out of range");
    is_outlier[o.index] = 1;
    out[o.index] = o.value;
  }
  for (std::uint64_t j = 0; j < n; ++j) {
    if (!is_outlier[j]) out[j] = state.retrieve(j);
  }
  return out;
}

}  // namespace wsketch
