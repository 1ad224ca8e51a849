#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "wsketch/distribution.hpp"
#include "wsketch/sketch.hpp"

namespace wsketch {

/// Relative-error histogram: an exact-zero bucket, an underflow bucket for
/// (0, 1e-4), log-spaced buckets covering [1e-4, 1e1) with four per decade,
/// and an overflow bucket for >= 1e1.
struct RelativeErrorHistogram {
  static constexpr double kLow = 1e-4;
  static constexpr double kHigh = 1e1;
  static constexpr int kBinsPerDecade = 4;
  static constexpr int kBins = 5 * kBinsPerDecade;

  std::uint64_t exact_zero = 0;
  std::uint64_t underflow = 0;
  std::vector<std::uint64_t> bins = std::vector<std::uint64_t>(kBins, 0);
  std::uint64_t overflow = 0;

  void add(double relative_error);
  std::uint64_t total() const noexcept;
  /// Lower edge of log bin i.
  static double lower_edge(int i);

  friend bool operator==(const RelativeErrorHistogram&, const RelativeErrorHistogram&) = default;
};

struct CompressionReport {
  std::uint64_t weight_count = 0;
  /// Original weights equal to zero; excluded from relative-error statistics.
  std::uint64_t zero_weight_count = 0;
  double mean_relative_error = 0.0;
  double max_relative_error = 0.0;
  double sign_error_rate = 0.0;
  double untouched_fraction = 0.0;
  double unoccupied_fraction = 0.0;
  RelativeErrorHistogram histogram;
  /// States went through low-bit quantization; the underestimate property no
  /// longer holds strictly.
  bool quantized = false;

  friend bool operator==(const CompressionReport&, const CompressionReport&) = default;
};

/// Relative error |w - w'| / |w| per nonzero original; sign error when both
/// are nonzero with opposite signs; untouched means bit-identical.
CompressionReport report(std::span<const float> original, std::span<const float> approx,
                         double unoccupied_fraction);
CompressionReport report(std::span<const float> original, std::span<const float> approx,
                         const SketchState& state);

/// Cell-weighted unoccupied fraction across several states.
double unoccupied_fraction(std::span<const SketchState> states);

/// Line-oriented `key=value` rendering (one statistic per line).
std::string to_key_value(const CompressionReport& r);
/// Structured JSON rendering and its inverse.
std::string to_json(const CompressionReport& r);
CompressionReport report_from_json(const std::string& text);

/// (1 - 1/m)^k: expected fraction of empty buckets after hashing k items
/// uniformly into m buckets.
double expected_unoccupied(std::uint64_t k, std::uint64_t m);

/// L = F^{-1}(1 - p^{1/n}): the per-bucket minimum of n colliders drawn from
/// F exceeds L with probability p. Throws ContractError unless 0 < p < 1 and
/// n >= 1.
double error_lower_bound(double p, std::uint64_t n, const std::function<double(double)>& quantile);

struct BoundVerification {
  double p = 0.0;
  double coverage = 0.0;
  std::uint64_t buckets = 0;
  std::uint64_t rounds = 0;
  /// sqrt(p (1 - p) / buckets).
  double standard_error = 0.0;
  /// Bound evaluated at the mean load k/m (rounded, at least 1).
  double bound_at_mean_load = 0.0;
};

/// Monte Carlo check of the bound. Each round draws k weights, hashes them
/// into m buckets, and tests every occupied bucket's minimum against the
/// bound for that bucket's load. Rounds repeat until at least `min_buckets`
/// occupied buckets were tested.
BoundVerification verify_bound(const Distribution& dist, std::uint64_t k, std::uint64_t m,
                               double p, std::uint64_t min_buckets, std::uint64_t seed);

/// Classical count-min guarantees: delta ~ e^{-rows}, epsilon ~ e / columns.
/// Documented for CountMin only; they are heuristics for the other variants.
struct CountMinTradeoff {
  double delta = 0.0;
  double epsilon = 0.0;
};
CountMinTradeoff countmin_tradeoff(std::uint32_t rows, std::uint64_t columns);

struct VariantComparison {
  SketchConfig config;
  CompressionReport report;
};

/// Compress, decompress and report once per config. All configs must spend
/// the same number of state cells.
std::vector<VariantComparison> compare_variants(std::span<const float> weights,
                                                std::span<const SketchConfig> configs);

}  // namespace wsketch
