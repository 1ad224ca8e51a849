#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "wsketch/sketch.hpp"

namespace wsketch {

enum class QuantBits : std::uint8_t { kNone = 0, k4 = 4, k8 = 8 };

std::string_view to_string(QuantBits b) noexcept;
/// "none", "q4", "q8".
QuantBits parse_quant(std::string_view name);

inline constexpr std::uint32_t kDefaultGroupSize = 128;

/// Symmetric absmax quantization of sketch cells in fixed-size groups taken
/// over the row-major cell order.
struct QuantSpec {
  QuantBits bits = QuantBits::kNone;
  std::uint32_t group_size = kDefaultGroupSize;

  bool active() const noexcept { return bits != QuantBits::kNone; }
  /// 127 for 8-bit, 7 for 4-bit.
  int max_code() const noexcept;
  void validate() const;

  friend bool operator==(const QuantSpec&, const QuantSpec&) = default;
};

/// A sketch state with its cells stored as low-bit codes. With bits == none
/// the raw cell values are carried instead and the round trip is exact.
struct QuantizedState {
  SketchConfig config;
  QuantSpec spec;
  std::uint64_t weight_count = 0;
  /// 8-bit: one two's-complement byte per cell. 4-bit: two cells per byte,
  /// even cell in the low nibble.
  std::vector<std::uint8_t> codes;
  std::vector<float> scales;
  std::vector<std::uint8_t> occupied;
  /// Only used when spec.bits == none.
  std::vector<float> raw_values;

  std::uint64_t cell_count() const noexcept { return config.cell_count(); }
  std::uint64_t group_count() const noexcept;
  /// Signed code of cell i.
  int code(std::uint64_t i) const;
  /// Bytes occupied by codes (or raw values) plus scales.
  std::uint64_t payload_bytes() const noexcept;

  friend bool operator==(const QuantizedState&, const QuantizedState&) = default;
};

/// Bytes needed to pack `cells` codes of the given width.
std::uint64_t packed_code_bytes(std::uint64_t cells, QuantBits bits) noexcept;

/// Per group: scale ~= max|occupied value| / max_code, code = round(v / scale)
/// with halves away from zero, clamped. The stored scale keeps 16 significant
/// bits (rounded down), which makes code * scale exact in float32.
/// Unoccupied cells get code 0; groups without a nonzero cell get scale 0.
QuantizedState quantize_state(const SketchState& state, const QuantSpec& spec);

/// value = code * scale, occupied mask restored. Throws ContractError when
/// the parts are inconsistent (lengths, codes out of range, nonzero code on an
/// unoccupied cell).
SketchState dequantize_state(const QuantizedState& q);

/// rate * (quantized bits, or base_width when unquantized).
double equivalent_bits(double rate, QuantBits bits, unsigned base_width = 16);

/// Round half away from zero.
long long round_half_away(double x) noexcept;

}  // namespace wsketch
