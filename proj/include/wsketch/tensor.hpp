#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace wsketch {

/// Dense row-major float32 tensor. An empty shape denotes a scalar.
struct Tensor {
  std::vector<std::uint64_t> shape;
  std::vector<float> data;

  Tensor() : data(1, 0.0f) {}
  Tensor(std::vector<std::uint64_t> dims, std::vector<float> values);

  /// Product of dims; throws ContractError on 64-bit overflow.
  static std::uint64_t element_count(std::span<const std::uint64_t> dims);

  std::size_t ndim() const noexcept { return shape.size(); }
  std::size_t size() const noexcept { return data.size(); }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

}  // namespace wsketch
