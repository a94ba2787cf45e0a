#pragma once

// Random streams and exact samplers for symmetric alpha-stable variates,
// one-sided stable subordinator increments and Gaussian variates.
//
// Normalization: a unit symmetric stable sample has characteristic function
// exp(-|lambda|^alpha) for every alpha, so alpha = 2 gives variance 2.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace stableprod {

/// Stability exponent alpha in (0, 2].
class StabilityIndex {
 public:
  explicit StabilityIndex(double alpha) : alpha_(alpha) {
    if (!(alpha > 0.0 && alpha <= 2.0)) {
      throw std::invalid_argument("stability index must lie in (0, 2], got " +
                                  std::to_string(alpha));
    }
  }

  double value() const noexcept { return alpha_; }
  bool is_gaussian() const noexcept { return alpha_ == 2.0; }
  bool is_cauchy() const noexcept { return alpha_ == 1.0; }

  friend bool operator==(const StabilityIndex&, const StabilityIndex&) = default;

 private:
  double alpha_;
};

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  return splitmix64(x);
}

inline constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
  return (x << k) | (x >> (64 - k));
}

// Doornik's ZIGNOR variant of the Marsaglia-Tsang ziggurat, 128 layers.
struct ZigguratTables {
  static constexpr int kLayers = 128;
  static constexpr double kTailStart = 3.442619855899;
  static constexpr double kLayerArea = 9.91256303526217e-3;

  std::array<double, kLayers + 1> x{};
  std::array<double, kLayers> ratio{};

  ZigguratTables() {
    double f = std::exp(-0.5 * kTailStart * kTailStart);
    x[0] = kLayerArea / f;
    x[1] = kTailStart;
    x[kLayers] = 0.0;
    for (int i = 2; i < kLayers; ++i) {
      x[i] = std::sqrt(-2.0 * std::log(kLayerArea / x[i - 1] + f));
      f = std::exp(-0.5 * x[i] * x[i]);
    }
    for (int i = 0; i < kLayers; ++i) ratio[i] = x[i + 1] / x[i];
  }
};

inline const ZigguratTables& ziggurat_tables() {
  static const ZigguratTables tables;
  return tables;
}

}  // namespace detail

/// Reproducible stream identified by (seed, stream_id). The generator is
/// xoshiro256++ keyed by a splitmix64 hash of both identifiers, so a stream
/// depends on nothing but its two ids. Single owner; never share across threads.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_id_(stream_id) {
    std::uint64_t key = detail::mix64(seed) ^
                        detail::mix64(stream_id ^ 0xD1B54A32D192ED03ULL);
    for (auto& word : state_) word = detail::splitmix64(key);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  result_type operator()() noexcept { return next(); }

  std::uint64_t next() noexcept {
    const std::uint64_t result =
        detail::rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl(state_[3], 45);
    return result;
  }

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() noexcept {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

  double exponential() noexcept { return -std::log(uniform()); }

  /// Standard normal N(0, 1).
  double normal() noexcept {
    const auto& zig = detail::ziggurat_tables();
    for (;;) {
      const std::uint64_t bits = next();
      const double u =
          2.0 * ((static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53) - 1.0;
      const auto layer = static_cast<int>(bits & 0x7F);
      if (std::fabs(u) < zig.ratio[layer]) return u * zig.x[layer];
      if (layer == 0) return normal_tail(u < 0.0);
      const double x = u * zig.x[layer];
      const double f0 = std::exp(-0.5 * (zig.x[layer] * zig.x[layer] - x * x));
      const double f1 =
          std::exp(-0.5 * (zig.x[layer + 1] * zig.x[layer + 1] - x * x));
      if (f1 + uniform() * (f0 - f1) < 1.0) return x;
    }
  }

 private:
  double normal_tail(bool negative) noexcept {
    constexpr double r = detail::ZigguratTables::kTailStart;
    double x = 0.0;
    double y = 0.0;
    do {
      x = std::log(uniform()) / r;
      y = std::log(uniform());
    } while (-2.0 * y < x * x);
    return negative ? x - r : r - x;
  }

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::array<std::uint64_t, 4> state_{};
};

/// Independent substream for one batch (or sample) index.
inline RandomStream substream(std::uint64_t seed, std::uint64_t batch_index) {
  return RandomStream(seed, batch_index);
}

/// Seed for a run derived from a parent seed and a tag, used where a run must
/// draw fresh paths that do not overlap the parent's substreams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return detail::mix64(seed ^ detail::mix64(tag + 0x632BE59BD9B4E019ULL));
}

/// Symmetric alpha-stable variate with characteristic function
/// exp(-|lambda|^alpha) by the Chambers-Mallows-Stuck transform.
///
/// The symmetric transform is continuous in alpha through alpha = 1, where it
/// reduces to tan(U); the exponent (1 - alpha) / alpha multiplies a log that
/// stays bounded, so no cancellation appears near alpha = 1.
template <class Stream>
double sample_symmetric_stable(Stream& stream, const StabilityIndex& index) {
  const double alpha = index.value();
  if (alpha == 2.0) return std::numbers::sqrt2 * stream.normal();
  const double u = std::numbers::pi * (stream.uniform() - 0.5);
  if (alpha == 1.0) return std::tan(u);
  const double w = stream.exponential();
  const double lead = std::sin(alpha * u) / std::pow(std::cos(u), 1.0 / alpha);
  const double log_tail = std::log(std::cos((1.0 - alpha) * u) / w);
  return lead * std::exp((1.0 - alpha) / alpha * log_tail);
}

/// Positive stable variate with Laplace transform exp(-scale * lambda^index),
/// index in (0, 1), via Kanter's representation.
template <class Stream>
double sample_positive_stable(Stream& stream, double index, double scale) {
  if (!(index > 0.0 && index < 1.0)) {
    throw std::invalid_argument("positive stable index must lie in (0, 1)");
  }
  if (!(scale > 0.0)) {
    throw std::invalid_argument("positive stable scale must be positive");
  }
  constexpr double pi = std::numbers::pi;
  const double u = stream.uniform();
  const double w = stream.exponential();
  const double rest = 1.0 - index;
  const double log_kanter = index / rest * std::log(std::sin(index * pi * u)) +
                            std::log(std::sin(rest * pi * u)) -
                            std::log(std::sin(pi * u)) / rest;
  const double log_value = rest / index * (log_kanter - std::log(w)) +
                           std::log(scale) / index;
  return std::exp(log_value);
}

}  // namespace stableprod
