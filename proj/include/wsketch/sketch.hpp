#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "wsketch/hash.hpp"

namespace wsketch {

/// Update/retrieve rule pair.
///
///   AbsMaxMin  keep the minimum-|w| collider per cell, read back the
///              maximum-|cell| across rows (underestimates |w|).
///   AbsMinMax  keep the maximum-|w| collider per cell, read back the
///              minimum-|cell| across rows.
///   CountMin   add colliders into the cell, read back the minimum-|cell|.
enum class Variant : std::uint8_t { kAbsMaxMin = 0, kAbsMinMax = 1, kCountMin = 2 };

inline constexpr Variant kAllVariants[] = {Variant::kAbsMaxMin, Variant::kAbsMinMax,
                                           Variant::kCountMin};

std::string_view to_string(Variant v) noexcept;
/// Accepts "absmaxmin", "absminmax", "countmin" (case-insensitive).
Variant parse_variant(std::string_view name);

inline constexpr std::uint32_t kDefaultRows = 3;

struct SketchConfig {
  Variant variant = Variant::kAbsMaxMin;
  std::uint32_t rows = kDefaultRows;
  std::uint64_t columns = 1;
  std::uint64_t seed = 0;
  bool test_hash = false;

  /// Throws ContractError unless rows >= 1 and columns >= 1.
  void validate() const;
  std::uint64_t cell_count() const noexcept { return std::uint64_t{rows} * columns; }

  friend bool operator==(const SketchConfig&, const SketchConfig&) = default;
};

/// Columns per row so that rows * columns ~= rate * weight_count (at least 1).
std::uint64_t columns_for_rate(std::uint64_t weight_count, double rate, std::uint32_t rows);

/// Result of a single retrieval, including which bonded cell won.
struct Retrieval {
  float value = 0.0f;
  std::uint32_t row = 0;
  std::uint64_t column = 0;
};

/// The rows x columns compressed representation of one compression unit.
///
/// Cells start unoccupied; an unoccupied cell behaves as +inf magnitude for
/// AbsMaxMin and as an empty accumulator otherwise, and always stores 0.0f.
/// Addresses are unit-local flat indices.
class SketchState {
 public:
  explicit SketchState(const SketchConfig& config);

  /// Rebuilds a state from stored parts (deserialization, dequantization).
  /// `values` and `occupied` are row-major, rows * columns long.
  SketchState(const SketchConfig& config, std::uint64_t weight_count, std::vector<float> values,
              std::vector<std::uint8_t> occupied);

  /// Applies one weight to its bonded cell in every row. Extends
  /// weight_count() to cover `addr`.
  void update(std::uint64_t addr, float w);

  /// Throws ContractError when `addr` is outside weight_count() or any bonded
  /// cell is unoccupied (the address was never inserted).
  float retrieve(std::uint64_t addr) const { return retrieve_detail(addr).value; }
  Retrieval retrieve_detail(std::uint64_t addr) const;

  std::uint64_t column_of(std::uint32_t row, std::uint64_t addr) const noexcept {
    return hashes_.index(row, addr, config_.columns);
  }

  const SketchConfig& config() const noexcept { return config_; }
  const HashFamily& hashes() const noexcept { return hashes_; }
  std::uint32_t rows() const noexcept { return config_.rows; }
  std::uint64_t columns() const noexcept { return config_.columns; }
  std::uint64_t cell_count() const noexcept { return values_.size(); }
  std::uint64_t weight_count() const noexcept { return weight_count_; }

  float value(std::uint32_t row, std::uint64_t column) const {
    return values_[row * config_.columns + column];
  }
  bool occupied(std::uint32_t row, std::uint64_t column) const {
    return occupied_[row * config_.columns + column] != 0;
  }
  std::span<const float> values() const noexcept { return values_; }
  std::span<const std::uint8_t> occupied_mask() const noexcept { return occupied_; }

  std::uint64_t occupied_count() const noexcept;
  double unoccupied_fraction() const noexcept;

  /// Bitwise equality of config, weight count, cell values and mask.
  friend bool operator==(const SketchState& a, const SketchState& b) noexcept;

 private:
  SketchConfig config_;
  HashFamily hashes_;
  std::uint64_t weight_count_ = 0;
  std::vector<float> values_;
  std::vector<std::uint8_t> occupied_;
};

/// Total order used by the min-|x| reduction: smaller magnitude wins, and on
/// equal magnitude the non-negative value wins.
bool prefer_smaller_magnitude(float candidate, float current) noexcept;
/// Total order used by the max-|x| reduction: larger magnitude wins, and on
/// equal magnitude the non-negative value wins.
bool prefer_larger_magnitude(float candidate, float current) noexcept;

/// Builds a fresh state holding every weight (address = position).
/// Throws ContractError on empty input.
SketchState compress_unit(std::span<const float> weights, const SketchConfig& config);

/// As above, but addresses listed in `excluded` are not inserted. They still
/// count towards weight_count() and must be reconstructed by other means.
SketchState compress_unit(std::span<const float> weights, const SketchConfig& config,
                          std::span<const std::uint64_t> excluded);

/// Element j = retrieve(j). `count` must equal state.weight_count().
std::vector<float> decompress_unit(const SketchState& state, std::uint64_t count);

/// Occupancy mask implied by inserting addresses [0, weight_count) minus
/// `excluded` under `config`. Lets containers skip storing the mask.
std::vector<std::uint8_t> derive_occupancy(const SketchConfig& config,
                                           std::uint64_t weight_count,
                                           std::span<const std::uint64_t> excluded = {});

}  // namespace wsketch
