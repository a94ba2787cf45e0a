#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "stableprod/bridge.hpp"
#include "stableprod/rng.hpp"

using namespace stableprod;

namespace {

std::vector<double> stable_draws(double alpha, std::size_t count, std::uint64_t seed) {
  auto stream = substream(seed, 0);
  const StabilityIndex index(alpha);
  std::vector<double> out(count);
  for (auto& x : out) x = sample_symmetric_stable(stream, index);
  return out;
}

std::vector<double> negated(std::vector<double> values) {
  for (auto& v : values) v = -v;
  return values;
}

}  // namespace

TEST(StabilityIndex, RejectsValuesOutsideRange) {
  EXPECT_THROW(StabilityIndex(0.0), std::invalid_argument);
  EXPECT_THROW(StabilityIndex(-1.0), std::invalid_argument);
  EXPECT_THROW(StabilityIndex(2.0000001), std::invalid_argument);
  EXPECT_THROW(StabilityIndex(std::nan("")), std::invalid_argument);
  EXPECT_NO_THROW(StabilityIndex(2.0));
  EXPECT_NO_THROW(StabilityIndex(1e-3));
  EXPECT_TRUE(StabilityIndex(2.0).is_gaussian());
  EXPECT_TRUE(StabilityIndex(1.0).is_cauchy());
}

TEST(Substream, SameIdsGiveSameSequence) {
  auto a = substream(7, 0);
  auto b = substream(7, 0);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
}

TEST(Substream, DistinctIdsDiffer) {
  auto a = substream(7, 0);
  auto b = substream(7, 1);
  int equal = 0;
  for (int i = 0; i < 64; ++i) equal += a() == b();
  EXPECT_EQ(equal, 0);
}

TEST(Substream, IndependentOfCreationOrder) {
  auto direct = substream(7, 5);
  const auto first = direct();
  for (std::uint64_t id = 0; id < 100; ++id) {
    auto other = substream(7, id);
    other();
  }
  auto again = substream(7, 5);
  EXPECT_EQ(again(), first);
}

// Reference xoshiro256++ and splitmix64 written from the published
// algorithms, keyed the way substreams document it.
struct ReferenceXoshiro {
  std::uint64_t s[4];

  static std::uint64_t splitmix(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  static std::uint64_t hash(std::uint64_t x) { return splitmix(x); }
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  ReferenceXoshiro(std::uint64_t seed, std::uint64_t id) {
    std::uint64_t key = hash(seed) ^ hash(id ^ 0xD1B54A32D192ED03ULL);
    for (auto& w : s) w = splitmix(key);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s[0] + s[3], 23) + s[0];
    const std::uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
  }
};

TEST(Substream, MatchesReferenceGenerator) {
  for (std::uint64_t seed : {0ULL, 42ULL, 0xFFFFFFFFFFFFFFFFULL}) {
    for (std::uint64_t id : {0ULL, 1ULL, 123456789ULL}) {
      auto stream = substream(seed, id);
      ReferenceXoshiro reference(seed, id);
      for (int i = 0; i < 100; ++i) ASSERT_EQ(stream(), reference.next());
    }
  }
}

TEST(Substream, PinnedOutputs) {
  // Frozen values: a change here changes every seeded result downstream.
  auto s = substream(42, 0);
  EXPECT_EQ(s(), 15169257029232128750ULL);
  EXPECT_EQ(s(), 2875890650404109147ULL);
  EXPECT_EQ(substream(0, 0)(), 14224950789377014650ULL);
  auto u = substream(42, 7);
  EXPECT_DOUBLE_EQ(sample_symmetric_stable(u, StabilityIndex(1.5)), -0.70749780038964705);
  auto w = substream(42, 7);
  EXPECT_DOUBLE_EQ(w.normal(), -0.41661876195211239);
}

TEST(RandomStream, UniformStaysInsideOpenInterval) {
  auto s = substream(1, 2);
  double lo = 1.0;
  double hi = 0.0;
  double sum = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  EXPECT_GT(lo, 0.0);
  EXPECT_LT(hi, 1.0);
  EXPECT_NEAR(sum / n, 0.5, 0.002);
}

TEST(RandomStream, NormalMatchesStandardNormalCdf) {
  // One-sample KS distance against Phi computed from erf.
  auto s = substream(3, 4);
  const std::size_t n = 200000;
  std::vector<double> x(n);
  for (auto& v : x) v = s.normal();
  std::sort(x.begin(), x.end());
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double phi = 0.5 * (1.0 + std::erf(x[i] / std::sqrt(2.0)));
    d = std::max({d, std::fabs(phi - static_cast<double>(i) / n),
                  std::fabs(static_cast<double>(i + 1) / n - phi)});
  }
  EXPECT_LT(d, 1.63 / std::sqrt(static_cast<double>(n)));
  // Tail beyond the ziggurat base layer is sampled too.
  const auto beyond = std::count_if(x.begin(), x.end(),
                                    [](double v) { return std::fabs(v) > 3.442619855899; });
  const double expected = n * std::erfc(3.442619855899 / std::sqrt(2.0));
  EXPECT_NEAR(static_cast<double>(beyond), expected, 4.0 * std::sqrt(expected));
}

TEST(RandomStream, ExponentialHasUnitMean) {
  auto s = substream(5, 6);
  double sum = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) sum += s.exponential();
  EXPECT_NEAR(sum / n, 1.0, 0.005);
}

TEST(SymmetricStable, GaussianCaseHasVarianceTwo) {
  const auto x = stable_draws(2.0, 1000000, 11);
  double sum = 0.0;
  double sq = 0.0;
  for (double v : x) {
    sum += v;
    sq += v * v;
  }
  const double mean = sum / x.size();
  EXPECT_NEAR(sq / x.size() - mean * mean, 2.0, 0.01);
}

TEST(SymmetricStable, CauchyCdfAtOne) {
  const auto x = stable_draws(1.0, 1000000, 12);
  const auto below = std::count_if(x.begin(), x.end(), [](double v) { return v <= 1.0; });
  const double oracle = 0.5 + std::atan(1.0) / std::numbers::pi;
  EXPECT_NEAR(static_cast<double>(below) / x.size(), oracle, 0.002);
}

TEST(SymmetricStable, CauchyMedianIsZero) {
  auto x = stable_draws(1.0, 1000000, 13);
  std::nth_element(x.begin(), x.begin() + x.size() / 2, x.end());
  EXPECT_NEAR(x[x.size() / 2], 0.0, 0.005);
}

TEST(SymmetricStable, HalfStableCharacteristicFunctionAtOne) {
  const auto x = stable_draws(0.5, 400000, 14);
  double re = 0.0;
  for (double v : x) re += std::cos(v);
  EXPECT_NEAR(re / x.size(), std::exp(-1.0), 4.0 / std::sqrt(2.0 * x.size()));
}

TEST(SymmetricStable, CharacteristicFunctionForSeveralAlphas) {
  for (double alpha : {0.3, 0.8, 0.97, 1.0, 1.03, 1.5, 1.9, 2.0}) {
    const auto x = stable_draws(alpha, 200000, 15);
    for (double lambda : {0.5, 1.0, 2.0}) {
      double re = 0.0;
      for (double v : x) re += std::cos(lambda * v);
      const double oracle = std::exp(-std::pow(lambda, alpha));
      // var(cos) <= 1, so 4 / sqrt(n) is at least 4 standard errors.
      EXPECT_NEAR(re / x.size(), oracle, 4.0 / std::sqrt(static_cast<double>(x.size())))
          << "alpha " << alpha << " lambda " << lambda;
    }
  }
}

TEST(SymmetricStable, ContinuousInAlphaThroughOne) {
  // Same random inputs, alpha a hair away from 1: the variates must agree with
  // the alpha = 1 branch to first order.
  for (std::uint64_t id = 0; id < 1000; ++id) {
    auto s0 = substream(16, id);
    auto s1 = substream(16, id);
    auto s2 = substream(16, id);
    const double at_one = sample_symmetric_stable(s0, StabilityIndex(1.0));
    const double below = sample_symmetric_stable(s1, StabilityIndex(1.0 - 1e-9));
    const double above = sample_symmetric_stable(s2, StabilityIndex(1.0 + 1e-9));
    const double tol = 1e-6 * (1.0 + std::fabs(at_one)) * (1.0 + std::log1p(std::fabs(at_one)));
    EXPECT_NEAR(below, at_one, tol);
    EXPECT_NEAR(above, at_one, tol);
  }
}

TEST(SymmetricStable, SampleAndNegationAgree) {
  // A sample and its own negation are dependent, which doubles the variance of
  // the KS process near 0; compare one half with the negated other half
  // instead, and take the majority over three seeds (each run is a 1% test).
  for (double alpha : {0.5, 1.0, 1.5, 2.0}) {
    int passes = 0;
    for (std::uint64_t seed : {17, 18, 19}) {
      const auto x = stable_draws(alpha, 100000, seed);
      const std::vector<double> first(x.begin(), x.begin() + 50000);
      const auto second = negated(std::vector<double>(x.begin() + 50000, x.end()));
      passes += two_sample_ks(first, second).pass;
    }
    EXPECT_GE(passes, 2) << "alpha " << alpha;
  }
}

TEST(SymmetricStable, StableUnderConvolution) {
  for (double alpha : {0.7, 1.0, 1.3, 2.0}) {
    const StabilityIndex index(alpha);
    auto s = substream(18, 0);
    std::vector<double> sums(50000);
    for (auto& v : sums) {
      v = (sample_symmetric_stable(s, index) + sample_symmetric_stable(s, index)) /
          std::pow(2.0, 1.0 / alpha);
    }
    const auto fresh = stable_draws(alpha, 50000, 19);
    EXPECT_TRUE(two_sample_ks(sums, fresh).pass) << "alpha " << alpha;
  }
}

TEST(SymmetricStable, SubordinatedGaussianMatches) {
  for (double alpha : {1.0, 1.5}) {
    auto s = substream(20, 0);
    std::vector<double> mixed(50000);
    for (auto& v : mixed) {
      const double tau = sample_positive_stable(s, alpha / 2.0, std::pow(2.0, alpha / 2.0));
      v = std::sqrt(tau) * s.normal();
    }
    const auto direct = stable_draws(alpha, 50000, 21);
    EXPECT_TRUE(two_sample_ks(mixed, direct).pass) << "alpha " << alpha;
  }
}

TEST(PositiveStable, LevyCaseTailProbability) {
  // Laplace transform exp(-sqrt(lambda)) is the law of 1 / (2 N^2), so
  // P(tau >= 1) = P(|N| <= 1/sqrt 2) = erf(1/2).
  auto s = substream(22, 0);
  const int n = 1000000;
  int hits = 0;
  for (int i = 0; i < n; ++i) hits += sample_positive_stable(s, 0.5, 1.0) >= 1.0;
  EXPECT_NEAR(static_cast<double>(hits) / n, std::erf(0.5), 0.002);
}

TEST(PositiveStable, StrictlyPositive) {
  for (double index : {0.05, 0.3, 0.5, 0.75, 0.95}) {
    auto s = substream(23, 0);
    double lo = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 1000000; ++i) lo = std::min(lo, sample_positive_stable(s, index, 1.0));
    EXPECT_GT(lo, 0.0) << "index " << index;
  }
}

TEST(PositiveStable, ScaleActsAsPower) {
  // scale c multiplies the variate by c^{1/index}: scale 2 at index 1/2 is 4x.
  auto s1 = substream(24, 0);
  auto s2 = substream(25, 0);
  std::vector<double> scaled(50000);
  std::vector<double> unit(50000);
  for (auto& v : scaled) v = sample_positive_stable(s1, 0.5, 2.0);
  for (auto& v : unit) v = 4.0 * sample_positive_stable(s2, 0.5, 1.0);
  EXPECT_TRUE(two_sample_ks(scaled, unit).pass);
}

TEST(PositiveStable, LaplaceTransform) {
  for (double index : {0.25, 0.5, 0.75}) {
    auto s = substream(26, 0);
    const int n = 200000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += std::exp(-sample_positive_stable(s, index, 1.5));
    EXPECT_NEAR(sum / n, std::exp(-1.5), 4.0 / std::sqrt(4.0 * n)) << "index " << index;
  }
}

TEST(PositiveStable, RejectsBadArguments) {
  auto s = substream(0, 0);
  EXPECT_THROW(sample_positive_stable(s, 0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(sample_positive_stable(s, 1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(sample_positive_stable(s, 0.5, 0.0), std::invalid_argument);
}
