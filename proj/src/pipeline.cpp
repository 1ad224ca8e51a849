#include "wsketch/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <string>
#include <thread>

#include "wsketch/error.hpp"

namespace wsketch {

UnitLayout unit_layout(const std::vector<std::uint64_t>& shape, Granularity g) {
  const std::uint64_t total = Tensor::element_count(shape);
  if (total == 0) throw ContractError("cannot compress an empty tensor");
  if (g == Granularity::kRow) {
    const std::uint64_t last = shape.empty() ? 1 : shape.back();
    return {total / last, last};
  }
  if (shape.size() == 3) return {shape[0], total / shape[0]};
  return {1, total};
}

std::uint64_t column_budget(std::uint64_t weight_count, double rate, std::uint32_t rows) {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw ContractError("rate must be positive");
  if (rows == 0) throw ContractError("rows must be >= 1");
  return static_cast<std::uint64_t>(std::floor(rate * static_cast<double>(weight_count) / rows));
}

SketchContainer compress_tensor(const Tensor& input, const CompressOptions& o) {
  if (Tensor::element_count(input.shape) != input.data.size()) {
    throw ContractError("tensor shape/data mismatch");
  }
  o.quant.validate();
  SketchConfig probe{o.variant, o.rows, 1, 0, o.test_hash};
  probe.validate();

  const UnitLayout layout = unit_layout(input.shape, o.granularity);
  if (o.topk > layout.unit_size) throw ContractError("topk exceeds the unit size");
  if (layout.unit_size > std::uint64_t{1} << 32 && o.topk > 0) {
    throw ContractError("outlier indices are limited to 32 bits");
  }

  std::vector<double> scores(layout.unit_count, 1.0);
  if (o.importance) {
    if (o.granularity == Granularity::kUniform) {
      throw ContractError("uniform granularity does not take importance scores");
    }
    if (o.importance->size() != layout.unit_count) {
      throw ContractError("importance has " + std::to_string(o.importance->size()) +
                          " scores but the tensor has " + std::to_string(layout.unit_count) +
                          " units");
    }
    scores = *o.importance;
  }
  const std::uint64_t budget = column_budget(input.data.size(), o.rate, o.rows);
  if (o.column_floor * layout.unit_count > budget) {
    throw ContractError("rate too low: " + std::to_string(layout.unit_count) + " units need " +
                        std::to_string(o.column_floor * layout.unit_count) +
                        " columns, budget is " + std::to_string(budget));
  }
  const AllocationPlan plan = allocate_columns(scores, budget, o.column_floor);

  SketchContainer c;
  c.variant = o.variant;
  c.rows = o.rows;
  c.test_hash = o.test_hash;
  c.master_seed = o.seed;
  c.quant = o.quant;
  c.granularity = o.granularity;
  c.shape = input.shape;
  c.units.resize(layout.unit_count);

  auto work = [&](std::uint64_t i) {
    const std::span<const float> w(input.data.data() + i * layout.unit_size, layout.unit_size);
    const SketchConfig cfg = c.unit_config(i, plan.per_unit_columns[i]);
    SketchUnit& u = c.units[i];
    SketchState state(cfg);
    if (o.topk > 0) {
      u.outliers = split_topk_outliers(w, o.topk).outliers;
      state = compress_with_outliers(w, u.outliers, cfg);
    } else {
      state = compress_unit(w, cfg);
    }
    u.state = quantize_state(state, o.quant);
  };

  const unsigned threads =
      static_cast<unsigned>(std::min<std::uint64_t>(std::max(1u, o.threads), layout.unit_count));
  if (threads == 1) {
    for (std::uint64_t i = 0; i < layout.unit_count; ++i) work(i);
    return c;
  }
  std::atomic<std::uint64_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::uint64_t i = next++; i < layout.unit_count; i = next++) work(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return c;
}

Tensor decompress_container(const SketchContainer& c) {
  const std::uint64_t total = Tensor::element_count(c.shape);
  std::vector<float> data;
  data.reserve(total);
  for (const auto& u : c.units) {
    const std::vector<float> w = reconstruct_with_outliers(dequantize_state(u.state), u.outliers);
    data.insert(data.end(), w.begin(), w.end());
  }
  if (data.size() != total) throw FormatError("unit weight counts do not cover the tensor shape");
  return Tensor(c.shape, std::move(data));
}

CompressionSummary summarize(const SketchContainer& c, unsigned base_width) {
  CompressionSummary s;
  s.weight_count = Tensor::element_count(c.shape);
  s.unit_count = c.units.size();
  for (const auto& u : c.units) {
    s.state_elements += u.state.cell_count();
    s.outlier_count += u.outliers.size();
  }
  const double weights = static_cast<double>(s.weight_count);
  // An outlier costs an index and a value, charged as two base-width elements.
  const double outlier_elements = 2.0 * static_cast<double>(s.outlier_count);
  s.compression_rate = (static_cast<double>(s.state_elements) + outlier_elements) / weights;
  s.equivalent_bits =
      equivalent_bits(static_cast<double>(s.state_elements) / weights, c.quant.bits, base_width) +
      outlier_elements * base_width / weights;
  s.input_bytes = s.weight_count * sizeof(float);
  s.payload_bytes = c.payload_bytes();
  s.serialized_bytes = encode_sketch(c).size();
  s.payload_ratio = static_cast<double>(s.payload_bytes) / static_cast<double>(s.input_bytes);
  s.header_overhead = s.payload_bytes == 0
                          ? 0.0
                          : static_cast<double>(s.serialized_bytes - s.payload_bytes) /
                                static_cast<double>(s.payload_bytes);
  return s;
}

}  // namespace wsketch
