#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "wsketch/error.hpp"
#include "wsketch/importance.hpp"

using namespace wsketch;

TEST(ActivationImportance, HandExamples) {
  const std::vector<float> a = {1, 0, 0, 2};
  const auto p = activation_importance(a, 2, 2);
  EXPECT_EQ(p.scores, (std::vector<double>{0.5, 2.0}));
  EXPECT_EQ(p.sample_count, 2u);

  const std::vector<float> c(30, -1.5f);
  for (double s : activation_importance(c, 10, 3).scores) EXPECT_DOUBLE_EQ(s, 2.25);

  EXPECT_THROW(activation_importance(std::vector<float>{}, 0, 3), ContractError);
  EXPECT_THROW(activation_importance(a, 3, 2), ContractError);
  EXPECT_THROW(activation_importance(Tensor({4}, {1, 2, 3, 4})), ContractError);
}

TEST(ActivationImportance, MatchesTwoPassReference) {
  std::mt19937_64 rng(1);
  std::normal_distribution<float> n(0.3f, 2.0f);
  constexpr std::size_t N = 500, d = 37;
  std::vector<float> a(N * d);
  for (auto& x : a) x = n(rng);
  const auto p = activation_importance(Tensor({N, d}, a));
  // Reference: E[a^2] = Var[a] + E[a]^2, computed column by column in two passes.
  for (std::size_t j = 0; j < d; ++j) {
    long double mean = 0;
    for (std::size_t k = 0; k < N; ++k) mean += a[k * d + j];
    mean /= N;
    long double var = 0;
    for (std::size_t k = 0; k < N; ++k) var += (a[k * d + j] - mean) * (a[k * d + j] - mean);
    var /= N;
    const double ref = static_cast<double>(var + mean * mean);
    EXPECT_NEAR(p.scores[j], ref, 1e-6 * ref);
  }
  const double mean_ref = std::accumulate(p.scores.begin(), p.scores.end(), 0.0L) / d;
  EXPECT_NEAR(layer_importance(p), mean_ref, 1e-6 * mean_ref);
}

TEST(LayerImportance, Mean) {
  EXPECT_DOUBLE_EQ(layer_importance({Granularity::kRow, {1, 3}, 1}), 2.0);
  EXPECT_DOUBLE_EQ(layer_importance({Granularity::kRow, {0.7, 0.7, 0.7}, 1}), 0.7);
  EXPECT_THROW(layer_importance({}), ContractError);
}

TEST(Bucketize, CollapsesIntoSizeClasses) {
  ImportanceProfile p{Granularity::kRow, {1, 2, 3, 4, 5, 6, 7, 8}, 1};
  const auto b = bucketize(p, 4);
  EXPECT_EQ(b.scores, (std::vector<double>{1.5, 1.5, 3.5, 3.5, 5.5, 5.5, 7.5, 7.5}));
  ImportanceProfile ties{Granularity::kRow, {1, 1, 1, 1, 1, 9}, 1};
  const auto t = bucketize(ties, 4);
  EXPECT_EQ(t.scores[0], t.scores[4]);
  EXPECT_EQ(t.scores[5], 9.0);
  EXPECT_THROW(bucketize(p, 0), ContractError);
}

TEST(Allocation, HandExamples) {
  EXPECT_EQ(allocate_columns(std::vector<double>{1, 1, 1}, 1200).per_unit_columns,
            (std::vector<std::uint64_t>{400, 400, 400}));
  EXPECT_EQ(allocate_columns(std::vector<double>{1, 3}, 400, 16).per_unit_columns,
            (std::vector<std::uint64_t>{100, 300}));
  const auto z = allocate_columns(std::vector<double>{0, 1, 1}, 400, 16);
  EXPECT_EQ(z.per_unit_columns[0], 16u);
  EXPECT_EQ(z.per_unit_columns[1], 192u);
  EXPECT_EQ(allocate_columns(std::vector<double>{0, 0}, 100, 16).per_unit_columns,
            (std::vector<std::uint64_t>{50, 50}));
  EXPECT_THROW(allocate_columns(std::vector<double>{1, 1}, 31, 16), ContractError);
  EXPECT_THROW(allocate_columns(std::vector<double>{1, -1}, 100, 16), ContractError);
  EXPECT_THROW(allocate_columns(std::vector<double>{1, NAN}, 100, 16), ContractError);
  EXPECT_THROW(allocate_columns(std::vector<double>{}, 100, 16), ContractError);
}

TEST(Allocation, RandomizedProperties) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> units_d(1, 40);
  std::lognormal_distribution<double> score_d(0.0, 1.5);
  std::uniform_real_distribution<double> scale_d(1e-3, 1e3);
  std::bernoulli_distribution zero_d(0.1);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = units_d(rng);
    const std::uint64_t floor = trial % 3 == 0 ? 0 : 16;
    const std::uint64_t budget = floor * n + std::uniform_int_distribution<std::uint64_t>(0, 5000)(rng);
    std::vector<double> scores(n);
    for (auto& s : scores) s = zero_d(rng) ? 0.0 : score_d(rng);

    const AllocationPlan plan = allocate_columns(scores, budget, floor);
    ASSERT_EQ(plan.per_unit_columns.size(), n);
    // Conservation.
    ASSERT_LE(plan.allocated(), budget);
    ASSERT_GE(plan.allocated() + n, budget);
    for (auto c : plan.per_unit_columns) ASSERT_GE(c, floor);
    // Monotone across units.
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (scores[i] >= scores[j]) {
          ASSERT_GE(plan.per_unit_columns[i], plan.per_unit_columns[j]);
        }
      }
    }
    // Scale invariance.
    const double k = scale_d(rng);
    std::vector<double> scaled = scores;
    for (auto& s : scaled) s *= k;
    ASSERT_EQ(allocate_columns(scaled, budget, floor).per_unit_columns, plan.per_unit_columns)
        << "trial " << trial << " scale " << k;
    // Raising one score never lowers that unit's allocation.
    const std::size_t i = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    std::vector<double> raised = scores;
    raised[i] = raised[i] * 1.7 + 0.05;
    ASSERT_GE(allocate_columns(raised, budget, floor).per_unit_columns[i], plan.per_unit_columns[i])
        << "trial " << trial;
  }
}

TEST(PerturbationImportance, DominantLayerRanksHigher) {
  // Two "layers" feeding a fixed linear readout; loss is the squared output
  // error against the uncompressed model on fixed inputs.
  std::mt19937_64 rng(3);
  std::normal_distribution<float> n;
  std::vector<std::vector<float>> layers(2, std::vector<float>(4096));
  for (auto& w : layers[0]) w = 2.0f * n(rng);
  for (auto& w : layers[1]) w = 0.01f * n(rng);
  std::vector<float> x(4096);
  for (auto& v : x) v = n(rng);
  const auto output = [&](std::span<const std::vector<float>> ls) {
    double y = 0;
    for (const auto& l : ls) {
      for (std::size_t i = 0; i < x.size(); ++i) y += l[i] * x[i];
    }
    return y;
  };
  const double ref = output(layers);
  const LayerLoss loss = [&](std::span<const std::vector<float>> ls) {
    const double d = output(ls) - ref;
    return d * d;
  };
  const SketchConfig cfg{Variant::kAbsMaxMin, 3, columns_for_rate(4096, 0.125, 3), 17};
  const double big = perturbation_importance(layers, loss, 0, cfg);
  const double small = perturbation_importance(layers, loss, 1, cfg);
  EXPECT_GT(big, small);
  EXPECT_EQ(big, perturbation_importance(layers, loss, 0, cfg));
  EXPECT_EQ(perturbation_importance(layers, loss, 0, {Variant::kAbsMaxMin, 1, 4096, 0, true}), 0.0);
  EXPECT_THROW(perturbation_importance(layers, loss, 2, cfg), ContractError);
}

TEST(Outliers, SplitExamples) {
  const std::vector<float> w = {0.5f, -0.2f, 0.8f, -0.1f};
  const auto s = split_topk_outliers(w, 2);
  EXPECT_EQ(s.outliers, (std::vector<Outlier>{{2, 0.8f}, {0, 0.5f}}));
  EXPECT_EQ(s.remainder, (std::vector<float>{0.0f, -0.2f, 0.0f, -0.1f}));
  EXPECT_TRUE(split_topk_outliers(w, 0).outliers.empty());
  EXPECT_EQ(split_topk_outliers(w, 0).remainder, w);
  EXPECT_THROW(split_topk_outliers(w, 5), ContractError);
  const std::vector<float> ties = {-1.0f, 1.0f, 0.5f};
  EXPECT_EQ(split_topk_outliers(ties, 1).outliers.front().index, 0u);
}

TEST(Outliers, AllWeightsAsOutliersAreExact) {
  const std::vector<float> w = {0.5f, -0.2f, 0.8f, -0.1f};
  const auto s = split_topk_outliers(w, w.size());
  const SketchConfig cfg{Variant::kAbsMaxMin, 3, 2, 5};
  const SketchState st = compress_with_outliers(w, s.outliers, cfg);
  EXPECT_EQ(st.occupied_count(), 0u);
  EXPECT_EQ(reconstruct_with_outliers(st, s.outliers), w);
}

TEST(Outliers, ExtractionNeverWorsensReconstruction) {
  std::mt19937_64 rng(4);
  std::student_t_distribution<float> heavy(3.0f);
  std::vector<float> w(20000);
  for (auto& x : w) x = heavy(rng);
  const SketchConfig cfg{Variant::kAbsMaxMin, 3, columns_for_rate(w.size(), 0.25, 3), 8};
  const auto plain = decompress_unit(compress_unit(w, cfg), w.size());
  const auto split = split_topk_outliers(w, 200);
  const auto with = reconstruct_with_outliers(compress_with_outliers(w, split.outliers, cfg), split.outliers);
  std::vector<bool> is_outlier(w.size(), false);
  for (const auto& o : split.outliers) is_outlier[o.index] = true;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (is_outlier[i]) {
      ASSERT_EQ(with[i], w[i]);
      continue;
    }
    // Fewer colliders: magnitude can only grow towards |w|.
    ASSERT_GE(std::fabs(with[i]), std::fabs(plain[i]));
    ASSERT_LE(std::fabs(with[i]), std::fabs(w[i]));
    ASSERT_LE(std::fabs(w[i]) - std::fabs(with[i]), std::fabs(w[i]) - std::fabs(plain[i]));
  }
}

TEST(Granularity, Names) {
  for (auto g : {Granularity::kUniform, Granularity::kRow, Granularity::kLayer}) {
    EXPECT_EQ(parse_granularity(to_string(g)), g);
  }
  EXPECT_THROW(parse_granularity("block"), ContractError);
}
