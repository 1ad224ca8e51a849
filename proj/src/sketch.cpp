#include "wsketch/sketch.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <numeric>
#include <string>

#include "wsketch/error.hpp"

namespace wsketch {

std::string_view to_string(Variant v) noexcept {
  switch (v) {
    case Variant::kAbsMaxMin: return "absmaxmin";
    case Variant::kAbsMinMax: return "absminmax";
    case Variant::kCountMin: return "countmin";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (Variant v : kAllVariants) {
    if (lower == to_string(v)) return v;
  }
  throw ContractError("unknown sketch variant '" + std::string(name) + "'");
}

void SketchConfig::validate() const {
  if (rows == 0) throw ContractError("sketch rows must be >= 1");
  if (columns == 0) throw ContractError("sketch columns must be >= 1");
  if (rows > 255) throw ContractError("sketch rows must fit in 8 bits");
}

std::uint64_t columns_for_rate(std::uint64_t weight_count, double rate, std::uint32_t rows) {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw ContractError("compression rate must be > 0");
  if (rows == 0) throw ContractError("sketch rows must be >= 1");
  const double cols = std::floor(rate * static_cast<double>(weight_count) / rows + 1e-9);
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(cols));
}

bool prefer_smaller_magnitude(float candidate, float current) noexcept {
  const float a = std::fabs(candidate);
  const float b = std::fabs(current);
  if (a != b) return a < b;
  return !std::signbit(candidate) && std::signbit(current);
}

bool prefer_larger_magnitude(float candidate, float current) noexcept {
  const float a = std::fabs(candidate);
  const float b = std::fabs(current);
  if (a != b) return a > b;
  return !std::signbit(candidate) && std::signbit(current);
}

SketchState::SketchState(const SketchConfig& config)
    : config_(config), hashes_(config.seed, config.rows, config.test_hash) {
  config_.validate();
  values_.assign(config_.cell_count(), 0.0f);
  occupied_.assign(config_.cell_count(), 0);
}

SketchState::SketchState(const SketchConfig& config, std::uint64_t weight_count,
                         std::vector<float> values, std::vector<std::uint8_t> occupied)
    : config_(config),
      hashes_(config.seed, config.rows, config.test_hash),
      weight_count_(weight_count),
      values_(std::move(values)),
      occupied_(std::move(occupied)) {
  config_.validate();
  if (values_.size() != config_.cell_count() || occupied_.size() != config_.cell_count()) {
    throw ContractError("sketch state parts do not match rows x columns");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (occupied_[i] > 1) throw ContractError("occupied mask entries must be 0 or 1");
    if (!occupied_[i] && values_[i] != 0.0f) {
      throw ContractError("unoccupied sketch cells must hold 0");
    }
  }
}

void SketchState::update(std::uint64_t addr, float w) {
  const std::uint64_t cols = config_.columns;
  for (std::uint32_t r = 0; r < config_.rows; ++r) {
    const std::uint64_t cell = r * cols + hashes_.index(r, addr, cols);
    float& v = values_[cell];
    if (!occupied_[cell]) {
      v = w;
      occupied_[cell] = 1;
      continue;
    }
    switch (config_.variant) {
      case Variant::kAbsMaxMin:
        if (prefer_smaller_magnitude(w, v)) v = w;
        break;
      case Variant::kAbsMinMax:
        if (prefer_larger_magnitude(w, v)) v = w;
        break;
      case Variant::kCountMin:
        v += w;
        break;
    }
  }
  weight_count_ = std::max(weight_count_, addr + 1);
}

Retrieval SketchState::retrieve_detail(std::uint64_t addr) const {
  if (addr >= weight_count_) {
    throw ContractError("address " + std::to_string(addr) + " was never inserted (weight count " +
                        std::to_string(weight_count_) + ")");
  }
  const std::uint64_t cols = config_.columns;
  Retrieval best;
  for (std::uint32_t r = 0; r < config_.rows; ++r) {
    const std::uint64_t col = hashes_.index(r, addr, cols);
    const std::uint64_t cell = r * cols + col;
    if (!occupied_[cell]) {
      throw ContractError("address " + std::to_string(addr) + " maps to an unoccupied cell");
    }
    const float v = values_[cell];
    const bool better = r == 0 || (config_.variant == Variant::kAbsMaxMin
                                       ? prefer_larger_magnitude(v, best.value)
                                       : prefer_smaller_magnitude(v, best.value));
    if (better) best = Retrieval{v, r, col};
  }
  return best;
}

std::uint64_t SketchState::occupied_count() const noexcept {
  return static_cast<std::uint64_t>(std::count(occupied_.begin(), occupied_.end(), 1));
}

double SketchState::unoccupied_fraction() const noexcept {
  if (occupied_.empty()) return 0.0;
  return 1.0 - static_cast<double>(occupied_count()) / static_cast<double>(occupied_.size());
}

bool operator==(const SketchState& a, const SketchState& b) noexcept {
  if (!(a.config_ == b.config_) || a.weight_count_ != b.weight_count_ ||
      a.occupied_ != b.occupied_ || a.values_.size() != b.values_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.values_.size(); ++i) {
    if (std::bit_cast<std::uint32_t>(a.values_[i]) != std::bit_cast<std::uint32_t>(b.values_[i])) {
      return false;
    }
  }
  return true;
}

SketchState compress_unit(std::span<const float> weights, const SketchConfig& config) {
  return compress_unit(weights, config, {});
}

SketchState compress_unit(std::span<const float> weights, const SketchConfig& config,
                          std::span<const std::uint64_t> excluded) {
  if (weights.empty()) throw ContractError("cannot compress an empty weight sequence");
  std::vector<std::uint8_t> skip;
  if (!excluded.empty()) {
    skip.assign(weights.size(), 0);
    for (std::uint64_t e : excluded) {
      if (e >= weights.size()) throw ContractError("excluded address out of range");
      skip[e] = 1;
    }
  }
  SketchState state(config);
  for (std::uint64_t j = 0; j < weights.size(); ++j) {
    if (!skip.empty() && skip[j]) continue;
    state.update(j, weights[j]);
  }
  if (state.weight_count() != weights.size()) {
    // Trailing addresses were excluded; keep the unit length.
    return SketchState(config, weights.size(),
                       std::vector<float>(state.values().begin(), state.values().end()),
                       std::vector<std::uint8_t>(state.occupied_mask().begin(),
                                                 state.occupied_mask().end()));
  }
  return state;
}

std::vector<float> decompress_unit(const SketchState& state, std::uint64_t count) {
  if (count != state.weight_count()) {
    throw ContractError("decompress count " + std::to_string(count) +
                        " does not match weight count " + std::to_string(state.weight_count()));
  }
  std::vector<float> out(count);
  for (std::uint64_t j = 0; j < count; ++j) out[j] = state.retrieve(j);
  return out;
}

std::vector<std::uint8_t> derive_occupancy(const SketchConfig& config,
                                           std::uint64_t weight_count,
                                           std::span<const std::uint64_t> excluded) {
  config.validate();
  const HashFamily hashes(config.seed, config.rows, config.test_hash);
  std::vector<std::uint8_t> skip;
  if (!excluded.empty()) {
    skip.assign(weight_count, 0);
    for (std::uint64_t e : excluded) {
      if (e >= weight_count) throw ContractError("excluded address out of range");
      skip[e] = 1;
    }
  }
  std::vector<std::uint8_t> mask(config.cell_count(), 0);
  for (std::uint64_t j = 0; j < weight_count; ++j) {
    if (!skip.empty() && skip[j]) continue;
    for (std::uint32_t r = 0; r < config.rows; ++r) {
      mask[r * config.columns + hashes.index(r, j, config.columns)] = 1;
    }
  }
  return mask;
}

}  // namespace wsketch
