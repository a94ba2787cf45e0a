#pragma once

// Bridge sampling (exact Gaussian, endpoint rejection for general alpha), the
// pre-g_1 rescaling, time reversal, and the two-sample Kolmogorov-Smirnov test
// used to compare the resulting marginals.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stableprod/errors.hpp"
#include "stableprod/parallel.hpp"
#include "stableprod/paths.hpp"
#include "stableprod/rng.hpp"

namespace stableprod {

struct KsReport {
  double statistic = 0.0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  double critical_1pct = 0.0;
  bool pass = false;
};

/// Asymptotic two-sided Kolmogorov critical constant at level 1%:
/// sqrt(-ln(0.005) / 2).
inline double ks_critical_constant_1pct() {
  return std::sqrt(-0.5 * std::log(0.005));
}

inline KsReport two_sample_ks(std::span<const double> sample1,
                              std::span<const double> sample2) {
  if (sample1.empty() || sample2.empty()) {
    throw std::invalid_argument("KS test needs two nonempty samples");
  }
  std::vector<double> a(sample1.begin(), sample1.end());
  std::vector<double> b(sample2.begin(), sample2.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double n1 = static_cast<double>(a.size());
  const double n2 = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / n1 -
                              static_cast<double>(j) / n2));
  }
  KsReport report;
  report.statistic = d;
  report.n1 = a.size();
  report.n2 = b.size();
  report.critical_1pct = ks_critical_constant_1pct() * std::sqrt((n1 + n2) / (n1 * n2));
  report.pass = d < report.critical_1pct;
  return report;
}

struct BridgeSpec {
  StabilityIndex alpha{2.0};
  double length = 1.0;
  double start = 0.0;
  double end = 0.0;
  std::size_t steps = 256;

  void validate() const {
    if (!(length > 0.0)) throw std::invalid_argument("bridge length must be positive");
    if (steps < 2) throw std::invalid_argument("bridge needs at least 2 steps");
  }
};

/// Exact Gaussian bridge by sequential conditioning. Variance rate 2, matching
/// the unit stable normalization at alpha = 2.
template <class Stream>
SamplePath sample_brownian_bridge(Stream& stream, const BridgeSpec& spec) {
  spec.validate();
  if (!spec.alpha.is_gaussian()) {
    throw std::invalid_argument("exact bridge sampler needs alpha = 2");
  }
  constexpr double kVarianceRate = 2.0;
  const double dt = spec.length / static_cast<double>(spec.steps);
  std::vector<double> values(spec.steps + 1);
  values[0] = spec.start;
  for (std::size_t k = 1; k < spec.steps; ++k) {
    const double remaining = spec.length - dt * static_cast<double>(k - 1);
    const double after = spec.length - dt * static_cast<double>(k);
    const double mean =
        values[k - 1] + (spec.end - values[k - 1]) * dt / remaining;
    const double sd = std::sqrt(kVarianceRate * dt * after / remaining);
    values[k] = mean + sd * stream.normal();
  }
  values[spec.steps] = spec.end;
  return SamplePath(spec.length, std::move(values));
}

struct RejectionBridge {
  SamplePath path;
  std::uint64_t attempts = 0;
};

/// Free paths from spec.start, kept once the terminal value lands within
/// `endpoint_tolerance` of spec.end. Bias is O(tolerance).
template <class Stream>
RejectionBridge sample_stable_bridge_rejection(Stream& stream,
                                               const BridgeSpec& spec,
                                               double endpoint_tolerance,
                                               std::uint64_t max_attempts = 1000000) {
  spec.validate();
  if (!(endpoint_tolerance > 0.0)) {
    throw std::invalid_argument("endpoint tolerance must be positive");
  }
  for (std::uint64_t attempt = 1; attempt <= max_attempts; ++attempt) {
    auto path = simulate_path(stream, spec.alpha, spec.start, spec.length, spec.steps);
    if (std::fabs(path[path.steps()] - spec.end) <= endpoint_tolerance) {
      return {std::move(path), attempt};
    }
  }
  throw numerical_failure("bridge rejection sampler gave up after " +
                          std::to_string(max_attempts) + " attempts (end " +
                          std::to_string(spec.end) + ", tolerance " +
                          std::to_string(endpoint_tolerance) + ")");
}

struct BridgeBatch {
  std::vector<SamplePath> paths;
  std::uint64_t attempts = 0;

  double acceptance_rate() const {
    return attempts == 0 ? 0.0
                         : static_cast<double>(paths.size()) /
                               static_cast<double>(attempts);
  }
};

/// `count` rejection bridges, bridge i drawn from substream(seed, i).
inline BridgeBatch sample_stable_bridges(std::uint64_t seed, const BridgeSpec& spec,
                                         double endpoint_tolerance,
                                         std::uint64_t count, unsigned workers = 1,
                                         std::uint64_t max_attempts = 1000000) {
  std::vector<std::optional<SamplePath>> slots(count);
  std::vector<std::uint64_t> attempts(count, 0);
  for_each_chunk(0, count, workers,
                 [&](std::uint64_t lo, std::uint64_t hi, std::uint64_t) {
                   for (std::uint64_t i = lo; i < hi; ++i) {
                     auto stream = substream(seed, i);
                     auto bridge = sample_stable_bridge_rejection(
                         stream, spec, endpoint_tolerance, max_attempts);
                     attempts[i] = bridge.attempts;
                     slots[i].emplace(std::move(bridge.path));
                   }
                 });
  BridgeBatch batch;
  batch.paths.reserve(count);
  for (auto& slot : slots) batch.paths.push_back(std::move(*slot));
  batch.attempts = std::accumulate(attempts.begin(), attempts.end(), std::uint64_t{0});
  return batch;
}

/// One rejection bridge per target endpoint: bridge i starts at spec.start,
/// ends within `endpoint_tolerance` of ends[i] and draws from
/// substream(seed, i). Lets a bridge sample reproduce a given endpoint law.
inline BridgeBatch sample_matched_endpoint_bridges(
    std::uint64_t seed, const BridgeSpec& spec, std::span<const double> ends,
    double endpoint_tolerance, unsigned workers = 1,
    std::uint64_t max_attempts = 1000000) {
  spec.validate();
  std::vector<std::optional<SamplePath>> slots(ends.size());
  std::vector<std::uint64_t> attempts(ends.size(), 0);
  for_each_chunk(0, ends.size(), workers,
                 [&](std::uint64_t lo, std::uint64_t hi, std::uint64_t) {
                   for (std::uint64_t i = lo; i < hi; ++i) {
                     auto stream = substream(seed, i);
                     BridgeSpec target = spec;
                     target.end = ends[i];
                     auto bridge = sample_stable_bridge_rejection(
                         stream, target, endpoint_tolerance, max_attempts);
                     attempts[i] = bridge.attempts;
                     slots[i].emplace(std::move(bridge.path));
                   }
                 });
  BridgeBatch batch;
  batch.paths.reserve(ends.size());
  for (auto& slot : slots) batch.paths.push_back(std::move(*slot));
  batch.attempts = std::accumulate(attempts.begin(), attempts.end(), std::uint64_t{0});
  return batch;
}

struct PreG1 {
  SamplePath normalized;  ///< u -> X_{u g_1} / g_1^{1/alpha} on [0, 1), X_{g_1 -} at 1
  double a = 0.0;         ///< X_{g_1 -} / g_1^{1/alpha}
  double g1 = 0.0;
};

/// Rescaled path before the last sign change g_1, resampled on `resample_steps`
/// uniform steps of [0, 1] from the piecewise-constant (cadlag) grid path.
/// Absent when no sign change is seen on the grid.
inline std::optional<PreG1> rescaled_pre_g1(const SamplePath& path,
                                            const StabilityIndex& alpha,
                                            std::size_t resample_steps = 128) {
  if (path.start() != 0.0) throw std::invalid_argument("pre-g1 path must start at 0");
  if (path.horizon() < 1.0) throw std::invalid_argument("pre-g1 path needs horizon >= 1");
  if (resample_steps == 0) throw std::invalid_argument("resample_steps must be positive");
  const double g1 = last_sign_change(path, 1.0);
  if (g1 <= 0.0) return std::nullopt;
  const auto k = static_cast<std::size_t>(
      std::llround(g1 / path.horizon() * static_cast<double>(path.steps())));
  const double norm = std::pow(g1, 1.0 / alpha.value());
  std::vector<double> values(resample_steps + 1);
  values[0] = 0.0;
  for (std::size_t j = 1; j <= resample_steps; ++j) {
    // Previous grid point for u < 1; the left limit X_{g_1 -} at u = 1.
    const std::size_t index = std::min(j * k / resample_steps, k - 1);
    values[j] = path[index] / norm;
  }
  const double a = path[k - 1] / norm;
  return PreG1{SamplePath(1.0, std::move(values)), a, g1};
}

struct IndependenceReport {
  KsReport ks;
  double split_g1 = 0.0;
};

/// Splits (value, g1) pairs at the median of g1 (ties broken by input order)
/// and compares the two conditional samples of `value`.
inline IndependenceReport independence_check(
    std::span<const std::pair<double, double>> pairs) {
  if (pairs.size() < 10000) {
    throw std::invalid_argument("independence check needs at least 10^4 pairs");
  }
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    return pairs[l].second < pairs[r].second;
  });
  const std::size_t half = pairs.size() / 2;
  std::vector<double> low;
  std::vector<double> high;
  low.reserve(half);
  high.reserve(pairs.size() - half);
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < half ? low : high).push_back(pairs[order[i]].first);
  }
  IndependenceReport report;
  report.ks = two_sample_ks(low, high);
  report.split_g1 = pairs[order[half]].second;
  return report;
}

/// u -> value(1 - u). An involution.
inline SamplePath time_reversal(const SamplePath& path) {
  std::vector<double> values(path.values().rbegin(), path.values().rend());
  return SamplePath(path.horizon(), std::move(values));
}

/// Value at the grid point nearest to fraction u of the horizon.
inline double value_at_fraction(const SamplePath& path, double u) {
  const auto k = static_cast<std::size_t>(
      std::llround(u * static_cast<double>(path.steps())));
  return path[std::min(k, path.steps())];
}

// ---------------------------------------------------------------------------
// Pre-g_1 lemma check

struct LemmaCheckConfig {
  StabilityIndex alpha{2.0};
  std::size_t steps = 4096;     ///< grid of the free paths on [0, 1]
  std::uint64_t paths = 40000;  ///< free paths simulated
  std::uint64_t seed = 42;
  unsigned workers = 1;
  std::size_t pairs = 10000;    ///< pairs fed to the independence check
  std::size_t bridges = 10000;  ///< bridge samples per KS comparison
  std::size_t bridge_steps = 256;
  std::size_t resample_steps = 128;
  /// alpha < 2 conditions on |a| in [bin_low, bin_high); samples with a < 0
  /// are reflected, which the symmetry of the law allows.
  double bin_low = 0.0;
  double bin_high = 0.1;
  double endpoint_tolerance = 0.01;
  double reversal_endpoint = 1.0;
  double reversal_tolerance = 0.05;

  void validate() const {
    if (steps < 2) throw std::invalid_argument("lemma check needs steps >= 2");
    if (paths == 0) throw std::invalid_argument("lemma check needs paths > 0");
    if (pairs < 10000) {
      throw std::invalid_argument("independence check needs at least 10^4 pairs");
    }
    if (bridges == 0) throw std::invalid_argument("lemma check needs bridges > 0");
    if (bridge_steps < 2 || bridge_steps % 2 != 0) {
      throw std::invalid_argument("bridge steps must be even and >= 2");
    }
    if (resample_steps < 2 || resample_steps % 2 != 0) {
      throw std::invalid_argument("resample steps must be even and >= 2");
    }
    if (!(bin_low >= 0.0 && bin_high > bin_low)) {
      throw std::invalid_argument("endpoint bin needs 0 <= low < high");
    }
    if (!(endpoint_tolerance > 0.0 && reversal_tolerance > 0.0)) {
      throw std::invalid_argument("bridge tolerances must be positive");
    }
  }
};

struct LemmaReport {
  std::uint64_t paths = 0;
  std::uint64_t with_sign_change = 0;  ///< paths with g_1 > 0
  std::uint64_t in_bin = 0;            ///< of those, |a| inside the bin (alpha < 2)
  IndependenceReport independence;     ///< value at u = 1/2 against g_1
  KsReport marginal;                   ///< pre-g_1 value at 1/2 vs bridge value at 1/2
  KsReport reversal;                   ///< reversed bridge vs direct bridge at 1/2
  IndependenceReport dependent_control;  ///< same split on (g_1, g_1); must fail
  double bridge_acceptance = 1.0;
  double reversal_acceptance = 1.0;

  bool pass() const {
    return independence.ks.pass && marginal.pass && reversal.pass;
  }
};

/// Numerical check that the rescaled pre-g_1 path is independent of g_1 and is
/// a bridge, plus bridge time reversal. Alpha = 2 compares against exact
/// bridges 0 -> 0. For alpha < 2 only pairs with |a| in the bin are used, and
/// each comparison bridge targets the |a| of one of those pairs.
inline LemmaReport lemma_check(const LemmaCheckConfig& config) {
  config.validate();
  const bool gaussian = config.alpha.is_gaussian();
  std::vector<std::optional<std::pair<double, double>>> found(config.paths);
  std::vector<double> endpoints(config.paths, 0.0);
  for_each_chunk(0, config.paths, config.workers,
                 [&](std::uint64_t lo, std::uint64_t hi, std::uint64_t) {
                   for (std::uint64_t i = lo; i < hi; ++i) {
                     auto stream = substream(config.seed, i);
                     const auto path =
                         simulate_path(stream, config.alpha, 0.0, 1.0, config.steps);
                     const auto pre = rescaled_pre_g1(path, config.alpha,
                                                      config.resample_steps);
                     if (!pre) continue;
                     const double sign = !gaussian && pre->a < 0.0 ? -1.0 : 1.0;
                     found[i].emplace(sign * value_at_fraction(pre->normalized, 0.5),
                                      pre->g1);
                     endpoints[i] = pre->a;
                   }
                 });
  LemmaReport report;
  report.paths = config.paths;
  std::vector<std::pair<double, double>> pairs;
  std::vector<double> matched_ends;
  for (std::uint64_t i = 0; i < config.paths; ++i) {
    if (!found[i]) continue;
    ++report.with_sign_change;
    const double size = std::fabs(endpoints[i]);
    if (!gaussian && !(size >= config.bin_low && size < config.bin_high)) continue;
    ++report.in_bin;
    if (pairs.size() < config.pairs) {
      pairs.push_back(*found[i]);
      matched_ends.push_back(size);
    }
  }
  if (pairs.size() < config.pairs) {
    throw numerical_failure("lemma check found " + std::to_string(pairs.size()) +
                            " usable pre-g1 samples, needs " +
                            std::to_string(config.pairs) + "; raise paths");
  }
  report.independence = independence_check(pairs);
  std::vector<std::pair<double, double>> control;
  control.reserve(pairs.size());
  for (const auto& pair : pairs) control.emplace_back(pair.second, pair.second);
  report.dependent_control = independence_check(control);

  std::vector<double> pre_values;
  pre_values.reserve(pairs.size());
  for (const auto& pair : pairs) pre_values.push_back(pair.first);

  BridgeSpec spec;
  spec.alpha = config.alpha;
  spec.steps = config.bridge_steps;
  const std::size_t count = std::min(config.bridges, matched_ends.size());
  std::vector<double> bridge_values;
  bridge_values.reserve(config.bridges);
  if (gaussian) {
    for (std::uint64_t i = 0; i < config.bridges; ++i) {
      auto stream = substream(derive_seed(config.seed, 1), i);
      bridge_values.push_back(
          value_at_fraction(sample_brownian_bridge(stream, spec), 0.5));
    }
  } else {
    const auto batch = sample_matched_endpoint_bridges(
        derive_seed(config.seed, 1), spec,
        std::span<const double>(matched_ends.data(), count),
        config.endpoint_tolerance, config.workers);
    for (const auto& path : batch.paths) {
      bridge_values.push_back(value_at_fraction(path, 0.5));
    }
    report.bridge_acceptance = batch.acceptance_rate();
  }
  report.marginal = two_sample_ks(pre_values, bridge_values);

  BridgeSpec forward = spec;
  forward.start = config.reversal_endpoint;
  forward.end = 0.0;
  BridgeSpec backward = spec;
  backward.start = 0.0;
  backward.end = config.reversal_endpoint;
  std::vector<double> reversed;
  std::vector<double> direct;
  if (gaussian) {
    for (std::uint64_t i = 0; i < config.bridges; ++i) {
      auto s1 = substream(derive_seed(config.seed, 2), i);
      auto s2 = substream(derive_seed(config.seed, 3), i);
      reversed.push_back(value_at_fraction(
          time_reversal(sample_brownian_bridge(s1, forward)), 0.5));
      direct.push_back(value_at_fraction(sample_brownian_bridge(s2, backward), 0.5));
    }
  } else {
    const auto first = sample_stable_bridges(derive_seed(config.seed, 2), forward,
                                             config.reversal_tolerance,
                                             config.bridges, config.workers);
    const auto second = sample_stable_bridges(derive_seed(config.seed, 3), backward,
                                              config.reversal_tolerance,
                                              config.bridges, config.workers);
    for (const auto& path : first.paths) {
      reversed.push_back(value_at_fraction(time_reversal(path), 0.5));
    }
    for (const auto& path : second.paths) {
      direct.push_back(value_at_fraction(path, 0.5));
    }
    report.reversal_acceptance =
        static_cast<double>(first.paths.size() + second.paths.size()) /
        static_cast<double>(first.attempts + second.attempts);
  }
  report.reversal = two_sample_ks(reversed, direct);
  return report;
}

}  // namespace stableprod
