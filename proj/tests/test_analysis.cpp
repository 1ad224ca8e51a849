#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "wsketch/analysis.hpp"
#include "wsketch/error.hpp"

using namespace wsketch;

namespace {

std::vector<float> gaussian(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> d;
  std::vector<float> w(n);
  for (auto& x : w) x = d(rng);
  return w;
}

}  // namespace

TEST(Report, HandExamples) {
  const std::vector<float> w = {0.5f, 0.5f, 0.0f, 2.0f};
  const std::vector<float> a = {0.4f, -0.3f, 0.0f, 2.0f};
  const CompressionReport r = report(w, a, 0.25);
  EXPECT_EQ(r.weight_count, 4u);
  EXPECT_EQ(r.zero_weight_count, 1u);
  EXPECT_NEAR(r.mean_relative_error, (0.2 + 1.6 + 0.0) / 3, 1e-6);
  EXPECT_NEAR(r.max_relative_error, 1.6, 1e-6);
  EXPECT_DOUBLE_EQ(r.sign_error_rate, 0.25);
  EXPECT_DOUBLE_EQ(r.untouched_fraction, 0.5);
  EXPECT_DOUBLE_EQ(r.unoccupied_fraction, 0.25);
  EXPECT_EQ(r.histogram.total() + r.zero_weight_count, r.weight_count);
  EXPECT_EQ(r.histogram.exact_zero, 1u);
}

TEST(Report, LengthMismatchThrows) {
  EXPECT_THROW(report(std::vector<float>{1.0f}, std::vector<float>{}, 0.0), ContractError);
}

TEST(Report, InjectiveCompressionIsUntouched) {
  const auto w = gaussian(1000, 1);
  const SketchState s = compress_unit(w, {Variant::kAbsMaxMin, 1, 1000, 0, true});
  const CompressionReport r = report(w, decompress_unit(s, w.size()), s);
  EXPECT_DOUBLE_EQ(r.untouched_fraction, 1.0);
  EXPECT_DOUBLE_EQ(r.mean_relative_error, 0.0);
  EXPECT_DOUBLE_EQ(r.sign_error_rate, 0.0);
}

TEST(Report, IsPureAndRoundTripsThroughJson) {
  const auto w = gaussian(5000, 2);
  const SketchState s = compress_unit(w, {Variant::kAbsMaxMin, 3, 800, 5});
  const auto a = decompress_unit(s, w.size());
  const CompressionReport r = report(w, a, s);
  EXPECT_EQ(r, report(w, a, s));
  EXPECT_EQ(report_from_json(to_json(r)), r);
  EXPECT_THROW(report_from_json("{\"weight_count\": 1}"), FormatError);
  EXPECT_THROW(report_from_json("not json"), FormatError);
  EXPECT_NE(to_key_value(r).find("untouched_fraction="), std::string::npos);
  EXPECT_GE(r.untouched_fraction, 0.0);
  EXPECT_LE(r.untouched_fraction, 1.0);
  EXPECT_EQ(r.histogram.total() + r.zero_weight_count, r.weight_count);
}

TEST(Report, HistogramEdges) {
  RelativeErrorHistogram h;
  h.add(0.0);
  h.add(5e-5);
  h.add(1e-4);
  h.add(0.99e1);
  h.add(10.0);
  EXPECT_EQ(h.exact_zero, 1u);
  EXPECT_EQ(h.underflow, 1u);
  EXPECT_EQ(h.bins.front(), 1u);
  EXPECT_EQ(h.bins.back(), 1u);
  EXPECT_EQ(h.overflow, 1u);
  EXPECT_NEAR(RelativeErrorHistogram::lower_edge(4), 1e-3, 1e-15);
}

TEST(Report, AbsMaxMinErrorsTraceBackToColliders) {
  // Oracle: rebuild collision groups, find which collider each retrieval came
  // from, and derive relative and sign errors from that.
  const auto w = gaussian(4000, 3);
  const SketchConfig cfg{Variant::kAbsMaxMin, 3, 700, 21};
  const SketchState s = compress_unit(w, cfg);
  const auto a = decompress_unit(s, w.size());
  const HashFamily h(cfg.seed, cfg.rows);
  std::map<std::uint64_t, std::vector<std::uint64_t>> groups;
  for (std::uint64_t i = 0; i < w.size(); ++i) {
    for (std::uint32_t r = 0; r < cfg.rows; ++r) groups[r * cfg.columns + h.index(r, i, cfg.columns)].push_back(i);
  }
  std::uint64_t flips = 0;
  for (std::uint64_t i = 0; i < w.size(); ++i) {
    std::uint64_t source = i;
    float best = -1.0f;
    for (std::uint32_t r = 0; r < cfg.rows; ++r) {
      std::uint64_t winner = i;
      for (auto j : groups[r * cfg.columns + h.index(r, i, cfg.columns)]) {
        if (std::fabs(w[j]) < std::fabs(w[winner])) winner = j;
      }
      if (std::fabs(w[winner]) > best) {
        best = std::fabs(w[winner]);
        source = winner;
      }
    }
    ASSERT_EQ(std::fabs(a[i]), std::fabs(w[source]));
    const bool flipped = std::signbit(w[source]) != std::signbit(w[i]);
    flips += flipped;
    if (!flipped) {
      const CompressionReport one = report(std::vector<float>{w[i]}, std::vector<float>{a[i]}, 0.0);
      EXPECT_NEAR(one.mean_relative_error, (std::fabs(w[i]) - std::fabs(a[i])) / std::fabs(w[i]), 1e-6);
    }
  }
  EXPECT_DOUBLE_EQ(report(w, a, s).sign_error_rate, double(flips) / w.size());
}

TEST(CollisionModel, ExpectedUnoccupied) {
  EXPECT_NEAR(expected_unoccupied(100000, 50000), 0.13533257652165492, 1e-12);
  EXPECT_NEAR(expected_unoccupied(100000, 25000), 0.018314173657086888, 1e-12);
  EXPECT_NEAR(expected_unoccupied(100000, 12500), 0.0003353552913127374, 1e-14);
  EXPECT_DOUBLE_EQ(expected_unoccupied(0, 10), 1.0);
  EXPECT_DOUBLE_EQ(expected_unoccupied(5, 1), 0.0);
  EXPECT_THROW(expected_unoccupied(5, 0), ContractError);
}

TEST(CollisionModel, EmpiricalWithinFourSigma) {
  for (std::uint64_t m : {5000u, 10000u, 20000u}) {
    const std::uint64_t k = 20000;
    const auto w = gaussian(k, m);
    const SketchState s = compress_unit(w, {Variant::kAbsMaxMin, 1, m, m});
    const double q = expected_unoccupied(k, m);
    // Occupancy indicators are weakly negatively correlated, so the binomial
    // sd is a slight overestimate.
    const double sd = std::sqrt(q * (1 - q) / m);
    EXPECT_NEAR(s.unoccupied_fraction(), q, 4 * sd) << "m=" << m;
  }
}

TEST(ErrorBound, ClosedFormValues) {
  const auto q = normal_distribution().quantile;
  // Reference values from an independent normal quantile implementation.
  EXPECT_NEAR(error_lower_bound(0.9, 4, q), -1.9431957852725734, 1e-9);
  EXPECT_NEAR(error_lower_bound(0.5, 2, q), -0.5449521356173604, 1e-9);
  EXPECT_NEAR(error_lower_bound(0.9, 8, q), -2.223717793997448, 1e-9);
  EXPECT_NEAR(error_lower_bound(0.99, 4, q), -2.8058207606684467, 1e-9);
  EXPECT_NEAR(error_lower_bound(0.25, 2, q), 0.0, 1e-12);
  for (double p : {0.1, 0.5, 0.7}) EXPECT_NEAR(error_lower_bound(p, 1, q), q(1 - p), 1e-12);
  EXPECT_NEAR(error_lower_bound(0.25, 2, laplace_distribution().quantile), 0.0, 1e-12);
  EXPECT_THROW(error_lower_bound(0.0, 2, q), ContractError);
  EXPECT_THROW(error_lower_bound(1.0, 2, q), ContractError);
  EXPECT_THROW(error_lower_bound(0.5, 0, q), ContractError);
}

TEST(ErrorBound, MinimumOfFourNormalsMonteCarlo) {
  const double L = error_lower_bound(0.9, 4, normal_distribution().quantile);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n;
  int hits = 0;
  constexpr int kTrials = 100000;
  for (int t = 0; t < kTrials; ++t) {
    double m = n(rng);
    for (int i = 1; i < 4; ++i) m = std::min(m, n(rng));
    hits += m >= L;
  }
  // Exact coverage is 0.9; allow three binomial standard errors.
  EXPECT_GE(hits / double(kTrials), 0.9 - 3 * std::sqrt(0.09 / kTrials));
}

TEST(ErrorBound, VerifyBoundCoverage) {
  const auto v = verify_bound(normal_distribution(), 40000, 10000, 0.95, 10000, 3);
  EXPECT_GE(v.buckets, 10000u);
  EXPECT_GE(v.coverage, 0.95 - 3 * v.standard_error);
  EXPECT_NEAR(v.standard_error, std::sqrt(0.95 * 0.05 / v.buckets), 1e-15);
}

TEST(ErrorBound, DegenerateDistributionAndLimits) {
  // All weights equal c: the quantile is c everywhere, so L = c <= minimum.
  const auto c = verify_bound(constant_distribution(0.7), 1000, 500, 0.9, 2000, 1);
  EXPECT_DOUBLE_EQ(c.coverage, 1.0);
  // p -> 1 pushes L to -inf and coverage to 1; p -> 0 pushes L up and
  // coverage to 0.
  const auto hi = verify_bound(normal_distribution(), 20000, 5000, 1 - 1e-9, 5000, 2);
  EXPECT_DOUBLE_EQ(hi.coverage, 1.0);
  const auto lo = verify_bound(normal_distribution(), 20000, 5000, 1e-9, 5000, 2);
  EXPECT_LT(lo.coverage, 1e-3);
}

TEST(ErrorBound, Deterministic) {
  const auto a = verify_bound(laplace_distribution(), 8000, 2000, 0.5, 4000, 9);
  const auto b = verify_bound(laplace_distribution(), 8000, 2000, 0.5, 4000, 9);
  EXPECT_EQ(a.coverage, b.coverage);
  EXPECT_EQ(a.buckets, b.buckets);
}

TEST(Distributions, EmpiricalQuantileIsInverseEcdf) {
  const auto d = empirical_distribution({3.0, 1.0, 2.0, 4.0});
  EXPECT_EQ(d.quantile(0.25), 1.0);
  EXPECT_EQ(d.quantile(0.26), 2.0);
  EXPECT_EQ(d.quantile(1.0), 4.0);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const double x = d.sample(rng);
    EXPECT_TRUE(x == 1.0 || x == 2.0 || x == 3.0 || x == 4.0);
  }
}

TEST(CountMin, Tradeoff) {
  EXPECT_NEAR(countmin_tradeoff(3, 100).delta, 0.049787068367863944, 1e-12);
  EXPECT_NEAR(countmin_tradeoff(1, static_cast<std::uint64_t>(std::exp(1.0) * 1000)).epsilon, 1e-3, 1e-6);
  EXPECT_DOUBLE_EQ(countmin_tradeoff(2, 200).epsilon * 2, countmin_tradeoff(2, 100).epsilon);
  EXPECT_THROW(countmin_tradeoff(0, 1), ContractError);
}

TEST(CompareVariants, InjectiveConfigsAreExactAndMemoryMustMatch) {
  const auto w = gaussian(300, 4);
  std::vector<SketchConfig> cfgs;
  for (Variant v : kAllVariants) cfgs.push_back({v, 1, 300, 0, true});
  for (const auto& c : compare_variants(w, cfgs)) {
    EXPECT_DOUBLE_EQ(c.report.mean_relative_error, 0.0);
    EXPECT_DOUBLE_EQ(c.report.untouched_fraction, 1.0);
  }
  cfgs.back().columns = 299;
  EXPECT_THROW(compare_variants(w, cfgs), ContractError);
}
