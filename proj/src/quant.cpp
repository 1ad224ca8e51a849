#include "wsketch/quant.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "wsketch/error.hpp"

namespace wsketch {
namespace {

// Keep 16 significant bits so that (|code| <= 127) * scale fits in 24 bits.
constexpr std::uint32_t kScaleMantissaMask = ~std::uint32_t{0xff};

float representable_scale(double exact) {
  float s = static_cast<float>(exact);
  if (static_cast<double>(s) > exact) s = std::nextafter(s, 0.0f);
  if (s < std::numeric_limits<float>::min()) {
    // Denormal territory: exactness is not worth the overflow risk.
    return std::nextafter(static_cast<float>(exact), std::numeric_limits<float>::infinity());
  }
  return std::bit_cast<float>(std::bit_cast<std::uint32_t>(s) & kScaleMantissaMask);
}

}  // namespace

std::string_view to_string(QuantBits b) noexcept {
  switch (b) {
    case QuantBits::kNone: return "none";
    case QuantBits::k4: return "q4";
    case QuantBits::k8: return "q8";
  }
  return "unknown";
}

QuantBits parse_quant(std::string_view name) {
  if (name == "none") return QuantBits::kNone;
  if (name == "q4") return QuantBits::k4;
  if (name == "q8") return QuantBits::k8;
  throw ContractError("unknown quantization '" + std::string(name) + "'");
}

int QuantSpec::max_code() const noexcept {
  switch (bits) {
    case QuantBits::k8: return 127;
    case QuantBits::k4: return 7;
    case QuantBits::kNone: return 0;
  }
  return 0;
}

void QuantSpec::validate() const {
  if (group_size == 0) throw ContractError("quantization group size must be >= 1");
  if (bits != QuantBits::kNone && bits != QuantBits::k4 && bits != QuantBits::k8) {
    throw ContractError("quantization bits must be 4 or 8");
  }
}

std::uint64_t packed_code_bytes(std::uint64_t cells, QuantBits bits) noexcept {
  switch (bits) {
    case QuantBits::k8: return cells;
    case QuantBits::k4: return (cells + 1) / 2;
    case QuantBits::kNone: return 0;
  }
  return 0;
}

std::uint64_t QuantizedState::group_count() const noexcept {
  if (!spec.active()) return 0;
  return (cell_count() + spec.group_size - 1) / spec.group_size;
}

int QuantizedState::code(std::uint64_t i) const {
  if (spec.bits == QuantBits::k8) return static_cast<std::int8_t>(codes[i]);
  const std::uint8_t byte = codes[i / 2];
  const int nibble = (i % 2 == 0) ? (byte & 0x0f) : (byte >> 4);
  return (nibble ^ 8) - 8;
}

std::uint64_t QuantizedState::payload_bytes() const noexcept {
  if (!spec.active()) return raw_values.size() * sizeof(float);
  return codes.size() + scales.size() * sizeof(float);
}

long long round_half_away(double x) noexcept {
  return static_cast<long long>(x < 0.0 ? -std::floor(-x + 0.5) : std::floor(x + 0.5));
}

QuantizedState quantize_state(const SketchState& state, const QuantSpec& spec) {
  spec.validate();
  QuantizedState q;
  q.config = state.config();
  q.spec = spec;
  q.weight_count = state.weight_count();
  q.occupied.assign(state.occupied_mask().begin(), state.occupied_mask().end());
  const auto values = state.values();
  if (!spec.active()) {
    q.raw_values.assign(values.begin(), values.end());
    return q;
  }

  const std::uint64_t n = values.size();
  const int qmax = spec.max_code();
  q.codes.assign(packed_code_bytes(n, spec.bits), 0);
  q.scales.assign(q.group_count(), 0.0f);
  for (std::uint64_t g = 0; g < q.scales.size(); ++g) {
    const std::uint64_t begin = g * spec.group_size;
    const std::uint64_t end = std::min<std::uint64_t>(begin + spec.group_size, n);
    double absmax = 0.0;
    for (std::uint64_t i = begin; i < end; ++i) {
      if (!q.occupied[i]) continue;
      if (!std::isfinite(values[i])) throw ContractError("cannot quantize non-finite sketch cell");
      absmax = std::max(absmax, std::fabs(static_cast<double>(values[i])));
    }
    if (absmax == 0.0) continue;
    const float scale = representable_scale(absmax / qmax);
    q.scales[g] = scale;
    for (std::uint64_t i = begin; i < end; ++i) {
      if (!q.occupied[i]) continue;
      const auto c = static_cast<int>(
          std::clamp<long long>(round_half_away(values[i] / static_cast<double>(scale)), -qmax, qmax));
      if (spec.bits == QuantBits::k8) {
        q.codes[i] = static_cast<std::uint8_t>(static_cast<std::int8_t>(c));
      } else {
        const auto nibble = static_cast<std::uint8_t>(c & 0x0f);
        q.codes[i / 2] |= (i % 2 == 0) ? nibble : static_cast<std::uint8_t>(nibble << 4);
      }
    }
  }
  return q;
}

SketchState dequantize_state(const QuantizedState& q) {
  q.spec.validate();
  const std::uint64_t n = q.cell_count();
  if (q.occupied.size() != n) throw ContractError("quantized mask length mismatch");
  if (!q.spec.active()) {
    if (q.raw_values.size() != n) throw ContractError("raw value length mismatch");
    return SketchState(q.config, q.weight_count, q.raw_values, q.occupied);
  }
  if (q.codes.size() != packed_code_bytes(n, q.spec.bits) || q.scales.size() != q.group_count()) {
    throw ContractError("quantized code or scale length mismatch");
  }
  const int qmax = q.spec.max_code();
  std::vector<float> values(n, 0.0f);
  for (std::uint64_t i = 0; i < n; ++i) {
    const int c = q.code(i);
    if (c < -qmax || c > qmax) throw ContractError("quantized code out of range");
    if (!q.occupied[i]) {
      if (c != 0) throw ContractError("nonzero code on an unoccupied cell");
      continue;
    }
    values[i] = static_cast<float>(c) * q.scales[i / q.spec.group_size];
  }
  return SketchState(q.config, q.weight_count, std::move(values), q.occupied);
}

double equivalent_bits(double rate, QuantBits bits, unsigned base_width) {
  const unsigned width = bits == QuantBits::kNone ? base_width : static_cast<unsigned>(bits);
  return rate * width;
}

}  // namespace wsketch
