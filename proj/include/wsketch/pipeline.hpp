#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "wsketch/container.hpp"

namespace wsketch {

struct CompressOptions {
  double rate = 0.5;
  std::uint32_t rows = kDefaultRows;
  std::uint64_t seed = 0;
  Variant variant = Variant::kAbsMaxMin;
  Granularity granularity = Granularity::kLayer;
  /// One score per unit; not allowed with uniform granularity.
  std::optional<std::vector<double>> importance;
  QuantSpec quant;
  /// Largest-magnitude weights kept outside the sketch, per unit.
  std::size_t topk = 0;
  bool test_hash = false;
  std::uint64_t column_floor = kDefaultColumnFloor;
  /// Worker threads for per-unit compression; output does not depend on it.
  unsigned threads = 1;
};

/// How a tensor is cut into compression units.
///   row          one unit per slice along the last dimension
///   layer        one unit per leading slice of a 3-D [layers, rows, cols]
///                tensor, otherwise the whole tensor
///   uniform      same units as layer
struct UnitLayout {
  std::uint64_t unit_count = 1;
  std::uint64_t unit_size = 1;
};
UnitLayout unit_layout(const std::vector<std::uint64_t>& shape, Granularity g);

/// floor(rate * weights / rows): columns shared by all units.
std::uint64_t column_budget(std::uint64_t weight_count, double rate, std::uint32_t rows);

/// Throws ContractError on bad options, importance length mismatch, or when
/// the per-unit column floor does not fit the budget.
SketchContainer compress_tensor(const Tensor& input, const CompressOptions& options);

/// Retrieves every weight (outliers restored) in the original shape.
Tensor decompress_container(const SketchContainer& c);

struct CompressionSummary {
  std::uint64_t weight_count = 0;
  std::uint64_t unit_count = 0;
  std::uint64_t state_elements = 0;
  std::uint64_t outlier_count = 0;
  /// (state elements + 2 per outlier) per original weight, at equal element
  /// width.
  double compression_rate = 0.0;
  /// Bits per original weight: state elements at the quantized width (or the
  /// base width when unquantized) plus outliers at two base-width elements.
  double equivalent_bits = 0.0;
  std::uint64_t input_bytes = 0;
  std::uint64_t payload_bytes = 0;
  std::uint64_t serialized_bytes = 0;
  /// payload_bytes / input_bytes with float32 input.
  double payload_ratio = 0.0;
  /// (serialized - payload) / payload.
  double header_overhead = 0.0;
};

CompressionSummary summarize(const SketchContainer& c, unsigned base_width = 16);

}  // namespace wsketch
