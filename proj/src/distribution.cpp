#include "wsketch/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include <boost/math/distributions/normal.hpp>

#include "wsketch/error.hpp"

namespace wsketch {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

Distribution normal_distribution(double mean, double stddev) {
  if (!(stddev > 0.0)) throw ContractError("normal stddev must be > 0");
  Distribution d;
  d.name = "normal";
  d.sample = [mean, stddev](std::mt19937_64& rng) {
    return std::normal_distribution<double>(mean, stddev)(rng);
  };
  d.quantile = [dist = boost::math::normal_distribution<double>(mean, stddev)](double q) {
    if (q <= 0.0) return -kInf;
    if (q >= 1.0) return kInf;
    return boost::math::quantile(dist, q);
  };
  return d;
}

Distribution laplace_distribution(double location, double scale) {
  if (!(scale > 0.0)) throw ContractError("laplace scale must be > 0");
  Distribution d;
  d.name = "laplace";
  d.sample = [location, scale](std::mt19937_64& rng) {
    const double u = std::uniform_real_distribution<double>(-0.5, 0.5)(rng);
    return location - scale * std::copysign(1.0, u) * std::log1p(-2.0 * std::fabs(u));
  };
  d.quantile = [location, scale](double q) {
    if (q <= 0.0) return -kInf;
    if (q >= 1.0) return kInf;
    return q < 0.5 ? location + scale * std::log(2.0 * q)
                   : location - scale * std::log(2.0 * (1.0 - q));
  };
  return d;
}

Distribution constant_distribution(double value) {
  Distribution d;
  d.name = "constant";
  d.sample = [value](std::mt19937_64&) { return value; };
  d.quantile = [value](double) { return value; };
  return d;
}

Distribution empirical_distribution(std::vector<double> samples) {
  if (samples.empty()) throw ContractError("empirical distribution needs samples");
  std::sort(samples.begin(), samples.end());
  auto sorted = std::make_shared<const std::vector<double>>(std::move(samples));
  Distribution d;
  d.name = "empirical";
  d.sample = [sorted](std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, sorted->size() - 1);
    return (*sorted)[pick(rng)];
  };
  d.quantile = [sorted](double q) {
    const auto n = static_cast<double>(sorted->size());
    if (q <= 0.0) return sorted->front();
    const double rank = std::ceil(q * n);
    const auto i = static_cast<std::size_t>(std::clamp(rank, 1.0, n)) - 1;
    return (*sorted)[i];
  };
  return d;
}

}  // namespace wsketch
