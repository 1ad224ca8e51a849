#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace wsketch {

/// A weight distribution as used by the error bound: a sampler plus its
/// quantile function (inverse CDF). quantile(0) / quantile(1) may be -inf/+inf.
struct Distribution {
  std::string name;
  std::function<double(std::mt19937_64&)> sample;
  std::function<double(double)> quantile;
};

Distribution normal_distribution(double mean = 0.0, double stddev = 1.0);
Distribution laplace_distribution(double location = 0.0, double scale = 1.0);
/// Every draw returns `value`.
Distribution constant_distribution(double value);
/// Resamples `samples` uniformly; quantile is the inverse empirical CDF
/// (smallest sample x with F(x) >= q).
Distribution empirical_distribution(std::vector<double> samples);

}  // namespace wsketch
