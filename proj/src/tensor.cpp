#include "wsketch/tensor.hpp"

#include <limits>

#include "wsketch/error.hpp"

namespace wsketch {

Tensor::Tensor(std::vector<std::uint64_t> dims, std::vector<float> values)
    : shape(std::move(dims)), data(std::move(values)) {
  if (element_count(shape) != data.size()) {
    throw ContractError("tensor payload does not match its shape");
  }
}

std::uint64_t Tensor::element_count(std::span<const std::uint64_t> dims) {
  std::uint64_t n = 1;
  for (std::uint64_t d : dims) {
    if (d != 0 && n > std::numeric_limits<std::uint64_t>::max() / d) {
      throw ContractError("tensor dimensions overflow 64 bits");
    }
    n *= d;
  }
  return n;
}

}  // namespace wsketch
