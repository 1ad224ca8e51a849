#include "wsketch/memory_model.hpp"

#include <algorithm>

#include "wsketch/error.hpp"

namespace wsketch {

PeakMemoryEstimate peak_memory_estimate(std::span<const std::uint64_t> layer_bytes,
                                        std::span<const std::uint64_t> sketch_bytes) {
  if (layer_bytes.empty()) throw ContractError("no layers given");
  if (layer_bytes.size() != sketch_bytes.size()) {
    throw ContractError("layer and sketch size lists differ in length");
  }
  PeakMemoryEstimate e;
  std::uint64_t largest = 0;
  for (std::size_t i = 0; i < layer_bytes.size(); ++i) {
    if (layer_bytes[i] == 0 || sketch_bytes[i] == 0) throw ContractError("sizes must be positive");
    e.baseline += layer_bytes[i];
    e.peak += sketch_bytes[i];
    largest = std::max(largest, layer_bytes[i]);
  }
  e.peak += largest;
  return e;
}

}  // namespace wsketch
