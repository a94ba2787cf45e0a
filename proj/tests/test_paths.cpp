#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "stableprod/bridge.hpp"
#include "stableprod/estimators.hpp"
#include "stableprod/paths.hpp"

using namespace stableprod;

namespace {

SamplePath path_of(std::vector<double> values) {
  const double horizon = static_cast<double>(values.size() - 1);
  return SamplePath(horizon, std::move(values));
}

ProductEnsemble ensemble_of(std::vector<std::vector<double>> paths) {
  std::vector<SamplePath> out;
  for (auto& v : paths) out.push_back(path_of(std::move(v)));
  return ProductEnsemble(std::move(out));
}

double brute_force_sup(const ProductEnsemble& e) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k <= e.steps(); ++k) {
    double p = 1.0;
    for (std::size_t i = 0; i < e.dimension(); ++i) p *= e.path(i)[k];
    best = std::max(best, p);
  }
  return best;
}

}  // namespace

TEST(SamplePath, GridAccessors) {
  const SamplePath p(2.0, {3.0, 1.0, 4.0, 1.0, 5.0});
  EXPECT_EQ(p.start(), 3.0);
  EXPECT_EQ(p.steps(), 4u);
  EXPECT_DOUBLE_EQ(p.step_size(), 0.5);
  EXPECT_DOUBLE_EQ(p.time_at(3), 1.5);
  EXPECT_EQ(p.last_index_at_or_before(1.2), 2u);
  EXPECT_EQ(p.last_index_at_or_before(2.0), 4u);
  EXPECT_THROW(p.last_index_at_or_before(2.5), std::invalid_argument);
  EXPECT_THROW(SamplePath(0.0, {0.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(SamplePath(1.0, {0.0}), std::invalid_argument);
}

TEST(ProductEnsemble, RejectsMismatchedGrids) {
  EXPECT_THROW(ensemble_of({{0, 1, 2}, {0, 1}}), std::invalid_argument);
  EXPECT_THROW(ensemble_of({{1, 1, 2}, {0, 1, 3}}), std::invalid_argument);
  EXPECT_THROW(ProductEnsemble({}), std::invalid_argument);
}

TEST(SimulatePath, StartsAtStart) {
  for (double alpha : {0.5, 1.0, 2.0}) {
    auto s = substream(1, 0);
    const auto p = simulate_path(s, StabilityIndex(alpha), 3.0, 1.0, 16);
    EXPECT_EQ(p[0], 3.0);
    EXPECT_EQ(p.steps(), 16u);
  }
}

TEST(SimulatePath, RejectsBadGrid) {
  auto s = substream(1, 0);
  EXPECT_THROW(simulate_path(s, StabilityIndex(1.0), 0.0, 1.0, 0), std::invalid_argument);
  EXPECT_THROW(simulate_path(s, StabilityIndex(1.0), 0.0, 0.0, 4), std::invalid_argument);
}

TEST(SimulatePath, GaussianTerminalVarianceIsTwo) {
  const std::size_t paths = 100000;
  double sum = 0.0;
  double sq = 0.0;
  for (std::size_t i = 0; i < paths; ++i) {
    auto s = substream(2, i);
    const auto p = simulate_path(s, StabilityIndex(2.0), 0.0, 1.0, 4096);
    sum += p[4096];
    sq += p[4096] * p[4096];
  }
  const double mean = sum / paths;
  EXPECT_NEAR(sq / paths - mean * mean, 2.0, 0.05);
}

TEST(SimulatePath, CauchyScalingInHorizon) {
  // 1-stable self-similarity: Z_2 has the law of 2 Z_1.
  std::vector<double> long_run(20000);
  std::vector<double> doubled(20000);
  for (std::size_t i = 0; i < long_run.size(); ++i) {
    auto s1 = substream(3, i);
    auto s2 = substream(4, i);
    long_run[i] = simulate_path(s1, StabilityIndex(1.0), 0.0, 2.0, 32)[32];
    doubled[i] = 2.0 * simulate_path(s2, StabilityIndex(1.0), 0.0, 1.0, 32)[32];
  }
  EXPECT_TRUE(two_sample_ks(long_run, doubled).pass);
}

TEST(SubordinatedPath, MatchesDirectSimulationAtHorizon) {
  std::vector<double> subordinated(20000);
  std::vector<double> direct(20000);
  for (std::size_t i = 0; i < direct.size(); ++i) {
    auto s1 = substream(5, i);
    auto s2 = substream(6, i);
    subordinated[i] = simulate_subordinated_path(s1, StabilityIndex(1.0), 1.0, 1024)[1024];
    direct[i] = simulate_path(s2, StabilityIndex(1.0), 0.0, 1.0, 1024)[1024];
  }
  EXPECT_TRUE(two_sample_ks(subordinated, direct).pass);
}

TEST(SubordinatedPath, StartsAtZeroAndIsSymmetric) {
  const std::size_t n = 100000;
  std::size_t positive = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto s = substream(7, i);
    const auto p = simulate_subordinated_path(s, StabilityIndex(1.5), 1.0, 8);
    ASSERT_EQ(p[0], 0.0);
    positive += p[8] > 0.0;
  }
  EXPECT_NEAR(static_cast<double>(positive) / n, 0.5, 0.005);
}

TEST(SubordinatedPath, RejectsGaussianIndex) {
  auto s = substream(1, 0);
  EXPECT_THROW(simulate_subordinated_path(s, StabilityIndex(2.0), 1.0, 8),
               std::invalid_argument);
}

TEST(SupProduct, HandExamples) {
  EXPECT_EQ(sup_product(ensemble_of({{0, 1, 2}, {0, 3, -1}})), 3.0);
  EXPECT_EQ(sup_product(ensemble_of({{0, -1, -2}})), 0.0);
}

TEST(SupProduct, NonnegativeAndMatchesBruteForce) {
  for (std::uint64_t i = 0; i < 200; ++i) {
    auto s = substream(8, i);
    const auto e = simulate_ensemble(s, StabilityIndex(1.0), 3, 1.0, 64);
    const double sup = sup_product(e);
    EXPECT_GE(sup, 0.0);
    EXPECT_EQ(sup, brute_force_sup(e));
  }
}

TEST(SupProduct, StreamingAgreesExactly) {
  for (double alpha : {0.8, 1.0, 2.0}) {
    for (std::size_t n : {1u, 2u, 3u, 9u}) {
      for (std::uint64_t i = 0; i < 20; ++i) {
        auto s1 = substream(9, i);
        auto s2 = substream(9, i);
        const auto e = simulate_ensemble(s1, StabilityIndex(alpha), n, 1.0, 128);
        const auto streamed = sup_product_streaming(s2, StabilityIndex(alpha), n, 1.0, 128,
                                                    [](double) { return false; });
        ASSERT_EQ(streamed.running_max, sup_product(e));
        ASSERT_FALSE(streamed.stopped_early);
      }
    }
  }
}

TEST(SupProduct, CoarserSubgridNeverExceedsFineGrid) {
  for (std::uint64_t i = 0; i < 100; ++i) {
    auto s = substream(10, i);
    const auto fine = simulate_ensemble(s, StabilityIndex(1.5), 2, 1.0, 256);
    const double fine_sup = sup_product(fine);
    for (std::size_t stride : {2u, 4u, 16u, 256u}) {
      std::vector<SamplePath> coarse;
      for (std::size_t j = 0; j < 2; ++j) {
        std::vector<double> v;
        for (std::size_t k = 0; k <= 256; k += stride) v.push_back(fine.path(j)[k]);
        coarse.emplace_back(1.0, std::move(v));
      }
      EXPECT_LE(sup_product(ProductEnsemble(std::move(coarse))), fine_sup);
    }
  }
}

TEST(SupProduct, SelfSimilarInHorizon) {
  // sup over [0, T] scaled by T^{-n/alpha} has the law of the sup over [0, 1].
  for (double alpha : {1.0, 2.0}) {
    for (std::size_t n : {1u, 2u}) {
      const double horizon = 3.0;
      std::vector<double> scaled(5000);
      std::vector<double> unit(5000);
      for (std::size_t i = 0; i < unit.size(); ++i) {
        auto s1 = substream(11, i);
        auto s2 = substream(12, i);
        scaled[i] = sup_product(simulate_ensemble(s1, StabilityIndex(alpha), n, horizon, 256)) /
                    std::pow(horizon, static_cast<double>(n) / alpha);
        unit[i] = sup_product(simulate_ensemble(s2, StabilityIndex(alpha), n, 1.0, 256));
      }
      EXPECT_TRUE(two_sample_ks(scaled, unit).pass) << "alpha " << alpha << " n " << n;
    }
  }
}

TEST(FirstEntrance, HandExamples) {
  const auto e = ensemble_of({{0, 0.5, 1.2, 0.3}});
  EXPECT_EQ(first_entrance_time(e), std::optional<double>(2.0));
  EXPECT_FALSE(first_entrance_time(ensemble_of({{0, 0.5, 0.9}})).has_value());
}

TEST(FirstEntrance, DualToSupProduct) {
  for (std::uint64_t i = 0; i < 2000; ++i) {
    auto s = substream(13, i);
    const auto e = simulate_ensemble(s, StabilityIndex(1.0), 2, 1.0, 64);
    for (double level : {0.01, 0.1, 1.0, 10.0}) {
      ASSERT_EQ(first_entrance_time(e, level).has_value(), sup_product(e) >= level);
    }
  }
}

TEST(FirstEntrance, ScalingIdentityWithPersistence) {
  // P(S_n <= eps) = P(R_n > eps^{-alpha/n}) with the entrance monitored on
  // [0, eps^{-alpha/n}], same substreams and grid.
  const double eps = 0.25;
  const std::size_t n = 2;
  const double horizon = std::pow(eps, -1.0 / n);
  const std::size_t samples = 20000;
  std::size_t persist = 0;
  std::size_t late = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    auto s1 = substream(14, i);
    auto s2 = substream(14, i);
    persist += sup_product(simulate_ensemble(s1, StabilityIndex(1.0), n, 1.0, 256)) <= eps;
    late += !first_entrance_time(simulate_ensemble(s2, StabilityIndex(1.0), n, horizon, 256))
                 .has_value();
  }
  const auto a = BernoulliEstimate::from_counts(persist, samples);
  const auto b = BernoulliEstimate::from_counts(late, samples);
  EXPECT_NEAR(a.p_hat, b.p_hat, 3.0 * std::hypot(a.standard_error(), b.standard_error()));
}

TEST(LastSignChange, HandExamples) {
  EXPECT_EQ(last_sign_change(path_of({0, 1, -1, 2}), 3.0), 3.0);
  EXPECT_EQ(last_sign_change(path_of({0, 1, 2, 3}), 3.0), 0.0);
  EXPECT_EQ(last_sign_change(path_of({0, 1, -1, -2}), 3.0), 2.0);
  EXPECT_EQ(last_sign_change(path_of({0, 1, -1, 2}), 2.0), 2.0);
}

TEST(LastSignChange, NeverExceedsT) {
  for (std::uint64_t i = 0; i < 500; ++i) {
    auto s = substream(15, i);
    const auto p = simulate_path(s, StabilityIndex(1.2), 0.0, 2.0, 128);
    for (double t : {0.3, 1.0, 2.0}) EXPECT_LE(last_sign_change(p, t), t);
  }
}

TEST(LastSignChange, BrownianMedianAtOneHalf) {
  // Arcsine law: P(g_1 <= 1/2) = 1/2. 16384 steps keeps missed crossings
  // near r = 1/2 below the tolerance.
  SimulationConfig config;
  config.alpha = StabilityIndex(2.0);
  config.steps = 16384;
  config.samples = 100000;
  config.seed = 16;
  const auto g = sample_last_sign_change(config);
  const auto below = std::count_if(g.begin(), g.end(), [](double v) { return v <= 0.5; });
  EXPECT_NEAR(static_cast<double>(below) / g.size(), 0.5, 0.005);
}

TEST(LastSignChange, StreamedSamplesMatchPathFunctional) {
  SimulationConfig config;
  config.alpha = StabilityIndex(1.0);
  config.steps = 512;
  config.samples = 300;
  config.seed = 17;
  const auto g = sample_last_sign_change(config);
  for (std::uint64_t i = 0; i < config.samples; ++i) {
    auto s = substream(config.seed, i);
    const auto p = simulate_path(s, config.alpha, 0.0, 1.0, config.steps);
    ASSERT_EQ(g[i], last_sign_change(p, 1.0));
  }
}

TEST(FirstPassage, HandExamples) {
  EXPECT_EQ(first_passage_nonpositive(path_of({1, 0.5, -0.2, 3})), std::optional<double>(2.0));
  EXPECT_FALSE(first_passage_nonpositive(path_of({1, 2, 3})).has_value());
  EXPECT_THROW(first_passage_nonpositive(path_of({0, 1})), std::invalid_argument);
  EXPECT_THROW(first_passage_nonpositive(path_of({-1, 1})), std::invalid_argument);
}

TEST(FirstPassage, PositiveTimes) {
  for (std::uint64_t i = 0; i < 500; ++i) {
    auto s = substream(18, i);
    const auto t = first_passage_nonpositive(
        simulate_path(s, StabilityIndex(0.7), 0.5, 1.0, 64));
    if (t) EXPECT_GT(*t, 0.0);
  }
}

TEST(FirstPassage, BrownianSurvivalFromOne) {
  // Unit paths are sqrt 2 times a standard BM, so start sqrt 2 is start 1 in
  // standard units. Reflection principle: P_1(T_0 >= 4) = 2 Phi(1/2) - 1.
  const std::size_t n = 20000;
  const std::size_t steps = 4096;
  const double t = 4.0;
  std::size_t alive = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto s = substream(19, i);
    const auto p = simulate_path(s, StabilityIndex(2.0), std::numbers::sqrt2, t, steps);
    alive += !first_passage_nonpositive(p).has_value();
  }
  const auto est = BernoulliEstimate::from_counts(alive, n);
  const double oracle = std::erf(0.5 / std::sqrt(2.0));
  EXPECT_NEAR(oracle, 0.3829, 1e-4);
  const double margin = brownian_survival_grid_margin(1.0, t, t / steps);
  EXPECT_GE(est.p_hat, oracle - 3.0 * est.standard_error());
  EXPECT_LE(est.p_hat, oracle + margin + 3.0 * est.standard_error());
}

TEST(ArgmaxTime, HandExamples) {
  EXPECT_EQ(argmax_time(path_of({0, 2, 1, 3}), 2.0), 1.0);
  EXPECT_EQ(argmax_time(path_of({0, -1, -2, -3}), 3.0), 0.0);
  EXPECT_EQ(argmax_time(path_of({0, 2, 2, 1}), 3.0), 1.0);
}

TEST(ArgmaxTime, WithinWindow) {
  for (std::uint64_t i = 0; i < 500; ++i) {
    auto s = substream(20, i);
    const auto p = simulate_path(s, StabilityIndex(1.0), 0.0, 1.0, 100);
    for (double w : {0.25, 0.5, 1.0}) EXPECT_LE(argmax_time(p, w), w);
  }
}

TEST(ArgmaxTime, BrownianArgmaxMedian) {
  const std::size_t n = 100000;
  std::size_t below = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto s = substream(21, i);
    below += argmax_time(simulate_path(s, StabilityIndex(2.0), 0.0, 1.0, 4096), 1.0) <= 0.5;
  }
  EXPECT_NEAR(static_cast<double>(below) / n, 0.5, 0.005);
}
