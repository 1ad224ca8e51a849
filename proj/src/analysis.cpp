#include "wsketch/analysis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include "json.hpp"
#include "wsketch/error.hpp"

namespace wsketch {

void RelativeErrorHistogram::add(double e) {
  if (e == 0.0) {
    ++exact_zero;
  } else if (e < kLow) {
    ++underflow;
  } else if (e >= kHigh) {
    ++overflow;
  } else {
    auto i = static_cast<int>(std::floor(std::log10(e / kLow) * kBinsPerDecade));
    ++bins[std::clamp(i, 0, kBins - 1)];
  }
}

std::uint64_t RelativeErrorHistogram::total() const noexcept {
  std::uint64_t t = exact_zero + underflow + overflow;
  for (auto b : bins) t += b;
  return t;
}

double RelativeErrorHistogram::lower_edge(int i) {
  return kLow * std::pow(10.0, static_cast<double>(i) / kBinsPerDecade);
}

CompressionReport report(std::span<const float> original, std::span<const float> approx,
                         double unoccupied) {
  if (original.size() != approx.size()) {
    throw ContractError("report: original and approximation lengths differ");
  }
  CompressionReport r;
  r.weight_count = original.size();
  r.unoccupied_fraction = unoccupied;
  std::uint64_t untouched = 0;
  std::uint64_t sign_errors = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < original.size(); ++i) {
    const float w = original[i];
    const float a = approx[i];
    if (std::bit_cast<std::uint32_t>(w) == std::bit_cast<std::uint32_t>(a)) ++untouched;
    if (w != 0.0f && a != 0.0f && std::signbit(w) != std::signbit(a)) ++sign_errors;
    if (w == 0.0f) {
      ++r.zero_weight_count;
      continue;
    }
    const double e = std::fabs(static_cast<double>(w) - a) / std::fabs(static_cast<double>(w));
    sum += e;
    r.max_relative_error = std::max(r.max_relative_error, e);
    r.histogram.add(e);
  }
  const std::uint64_t nonzero = r.weight_count - r.zero_weight_count;
  if (nonzero > 0) r.mean_relative_error = sum / static_cast<double>(nonzero);
  if (r.weight_count > 0) {
    r.sign_error_rate = static_cast<double>(sign_errors) / r.weight_count;
    r.untouched_fraction = static_cast<double>(untouched) / r.weight_count;
  }
  return r;
}

CompressionReport report(std::span<const float> original, std::span<const float> approx,
                         const SketchState& state) {
  return report(original, approx, state.unoccupied_fraction());
}

double unoccupied_fraction(std::span<const SketchState> states) {
  std::uint64_t cells = 0;
  std::uint64_t occupied = 0;
  for (const auto& s : states) {
    cells += s.cell_count();
    occupied += s.occupied_count();
  }
  return cells == 0 ? 0.0 : 1.0 - static_cast<double>(occupied) / static_cast<double>(cells);
}

std::string to_key_value(const CompressionReport& r) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "weight_count=" << r.weight_count << '\n'
     << "zero_weight_count=" << r.zero_weight_count << '\n'
     << "mean_relative_error=" << r.mean_relative_error << '\n'
     << "max_relative_error=" << r.max_relative_error << '\n'
     << "sign_error_rate=" << r.sign_error_rate << '\n'
     << "untouched_fraction=" << r.untouched_fraction << '\n'
     << "unoccupied_fraction=" << r.unoccupied_fraction << '\n'
     << "quantized=" << (r.quantized ? 1 : 0) << '\n'
     << "hist_exact_zero=" << r.histogram.exact_zero << '\n'
     << "hist_underflow=" << r.histogram.underflow << '\n';
  for (int i = 0; i < RelativeErrorHistogram::kBins; ++i) {
    os << "hist_bin_" << std::setprecision(4) << RelativeErrorHistogram::lower_edge(i) << '='
       << r.histogram.bins[i] << '\n';
  }
  os << "hist_overflow=" << r.histogram.overflow << '\n';
  return os.str();
}

std::string to_json(const CompressionReport& r) {
  nlohmann::json j;
  j["weight_count"] = r.weight_count;
  j["zero_weight_count"] = r.zero_weight_count;
  j["mean_relative_error"] = r.mean_relative_error;
  j["max_relative_error"] = r.max_relative_error;
  j["sign_error_rate"] = r.sign_error_rate;
  j["untouched_fraction"] = r.untouched_fraction;
  j["unoccupied_fraction"] = r.unoccupied_fraction;
  j["quantized"] = r.quantized;
  j["histogram"] = {{"low", RelativeErrorHistogram::kLow},
                    {"high", RelativeErrorHistogram::kHigh},
                    {"bins_per_decade", RelativeErrorHistogram::kBinsPerDecade},
                    {"exact_zero", r.histogram.exact_zero},
                    {"underflow", r.histogram.underflow},
                    {"bins", r.histogram.bins},
                    {"overflow", r.histogram.overflow}};
  return j.dump(2);
}

CompressionReport report_from_json(const std::string& text) {
  CompressionReport r;
  try {
    const auto j = nlohmann::json::parse(text);
    r.weight_count = j.at("weight_count").get<std::uint64_t>();
    r.zero_weight_count = j.at("zero_weight_count").get<std::uint64_t>();
    r.mean_relative_error = j.at("mean_relative_error").get<double>();
    r.max_relative_error = j.at("max_relative_error").get<double>();
    r.sign_error_rate = j.at("sign_error_rate").get<double>();
    r.untouched_fraction = j.at("untouched_fraction").get<double>();
    r.unoccupied_fraction = j.at("unoccupied_fraction").get<double>();
    r.quantized = j.at("quantized").get<bool>();
    const auto& h = j.at("histogram");
    r.histogram.exact_zero = h.at("exact_zero").get<std::uint64_t>();
    r.histogram.underflow = h.at("underflow").get<std::uint64_t>();
    r.histogram.bins = h.at("bins").get<std::vector<std::uint64_t>>();
    r.histogram.overflow = h.at("overflow").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed report: ") + e.what());
  }
  if (r.histogram.bins.size() != RelativeErrorHistogram::kBins) {
    throw FormatError("malformed report: histogram bin count");
  }
  return r;
}

double expected_unoccupied(std::uint64_t k, std::uint64_t m) {
  if (m == 0) throw ContractError("bucket count must be >= 1");
  if (k == 0) return 1.0;
  if (m == 1) return 0.0;
  return std::exp(static_cast<double>(k) * std::log1p(-1.0 / static_cast<double>(m)));
}

double error_lower_bound(double p, std::uint64_t n, const std::function<double(double)>& quantile) {
  if (!(p > 0.0 && p < 1.0)) throw ContractError("bound probability must lie in (0, 1)");
  if (n == 0) throw ContractError("collision count must be >= 1");
  // 1 - p^{1/n} without cancellation for large n.
  const double tail = -std::expm1(std::log(p) / static_cast<double>(n));
  return quantile(tail);
}

BoundVerification verify_bound(const Distribution& dist, std::uint64_t k, std::uint64_t m,
                               double p, std::uint64_t min_buckets, std::uint64_t seed) {
  if (k == 0 || m == 0) throw ContractError("verify_bound needs k >= 1 and m >= 1");
  BoundVerification out;
  out.p = p;
  out.bound_at_mean_load = error_lower_bound(
      p, std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(double(k) / m))),
      dist.quantile);

  std::map<std::uint64_t, double> bound_for_load;
  std::mt19937_64 rng(seed);
  std::vector<double> minimum(m);
  std::vector<std::uint64_t> load(m);
  std::uint64_t covered = 0;
  while (out.buckets < std::max<std::uint64_t>(min_buckets, 1)) {
    const HashFamily hash(mix64(seed + out.rounds + 1), 1);
    std::fill(minimum.begin(), minimum.end(), std::numeric_limits<double>::infinity());
    std::fill(load.begin(), load.end(), 0);
    for (std::uint64_t j = 0; j < k; ++j) {
      const std::uint64_t b = hash.index(0, j, m);
      minimum[b] = std::min(minimum[b], dist.sample(rng));
      ++load[b];
    }
    for (std::uint64_t b = 0; b < m; ++b) {
      if (load[b] == 0) continue;
      auto it = bound_for_load.find(load[b]);
      if (it == bound_for_load.end()) {
        it = bound_for_load.emplace(load[b], error_lower_bound(p, load[b], dist.quantile)).first;
      }
      if (minimum[b] >= it->second) ++covered;
      ++out.buckets;
    }
    ++out.rounds;
  }
  out.coverage = static_cast<double>(covered) / static_cast<double>(out.buckets);
  out.standard_error = std::sqrt(p * (1.0 - p) / static_cast<double>(out.buckets));
  return out;
}

CountMinTradeoff countmin_tradeoff(std::uint32_t rows, std::uint64_t columns) {
  if (rows == 0 || columns == 0) throw ContractError("rows and columns must be >= 1");
  return {std::exp(-static_cast<double>(rows)), std::exp(1.0) / static_cast<double>(columns)};
}

std::vector<VariantComparison> compare_variants(std::span<const float> weights,
                                                std::span<const SketchConfig> configs) {
  std::vector<VariantComparison> out;
  out.reserve(configs.size());
  for (const auto& cfg : configs) {
    if (cfg.cell_count() != configs.front().cell_count()) {
      throw ContractError("compared variants must use the same state memory");
    }
    const SketchState state = compress_unit(weights, cfg);
    const auto approx = decompress_unit(state, weights.size());
    out.push_back({cfg, report(weights, approx, state)});
  }
  return out;
}

}  // namespace wsketch
