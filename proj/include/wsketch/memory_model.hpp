#pragma once

#include <cstdint>
#include <span>

namespace wsketch {

struct PeakMemoryEstimate {
  /// All sketch states resident plus the largest layer decompressed at a time.
  std::uint64_t peak = 0;
  /// Every layer resident uncompressed.
  std::uint64_t baseline = 0;
};

/// Sum(sketch_bytes) + max(layer_bytes) against Sum(layer_bytes).
/// Throws ContractError on empty or unequal-length input and on zero sizes.
PeakMemoryEstimate peak_memory_estimate(std::span<const std::uint64_t> layer_bytes,
                                        std::span<const std::uint64_t> sketch_bytes);

}  // namespace wsketch
