#pragma once

// Discretized stable paths and the path functionals built on them: the
// supremum of a product of paths, first entrance into {product >= level},
// last sign change, first passage below zero and the argmax time.
//
// All continuous-time functionals are monitored on the uniform grid only.
// Grid suprema never exceed the true suprema, so persistence probabilities
// and first-passage times come out biased upward.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "stableprod/rng.hpp"

namespace stableprod {

/// Trajectory on the grid k * horizon / steps, k = 0..steps.
class SamplePath {
 public:
  SamplePath(double horizon, std::vector<double> values)
      : horizon_(horizon), values_(std::move(values)) {
    if (!(horizon_ > 0.0)) {
      throw std::invalid_argument("path horizon must be positive");
    }
    if (values_.size() < 2) {
      throw std::invalid_argument("path needs at least one step");
    }
  }

  double start() const noexcept { return values_.front(); }
  double horizon() const noexcept { return horizon_; }
  std::size_t steps() const noexcept { return values_.size() - 1; }
  double step_size() const noexcept {
    return horizon_ / static_cast<double>(steps());
  }
  double time_at(std::size_t k) const noexcept {
    return horizon_ * static_cast<double>(k) / static_cast<double>(steps());
  }

  /// Largest grid index whose time does not exceed t.
  std::size_t last_index_at_or_before(double t) const {
    if (t > horizon_ * (1.0 + 1e-12)) {
      throw std::invalid_argument("time lies beyond the path horizon");
    }
    if (t < 0.0) throw std::invalid_argument("time must be nonnegative");
    const double scaled = t / horizon_ * static_cast<double>(steps());
    const auto k = static_cast<std::size_t>(std::floor(scaled + 1e-9));
    return std::min(k, steps());
  }

  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t k) const noexcept { return values_[k]; }

 private:
  double horizon_;
  std::vector<double> values_;
};

/// n independent paths on one shared grid, all started at 0.
class ProductEnsemble {
 public:
  explicit ProductEnsemble(std::vector<SamplePath> paths)
      : paths_(std::move(paths)) {
    if (paths_.empty()) {
      throw std::invalid_argument("ensemble needs at least one path");
    }
    for (const auto& path : paths_) {
      if (path.steps() != paths_.front().steps() ||
          path.horizon() != paths_.front().horizon()) {
        throw std::invalid_argument("ensemble paths must share one grid");
      }
      if (path.start() != 0.0) {
        throw std::invalid_argument("ensemble paths must start at 0");
      }
    }
  }

  std::size_t dimension() const noexcept { return paths_.size(); }
  std::size_t steps() const noexcept { return paths_.front().steps(); }
  double horizon() const noexcept { return paths_.front().horizon(); }
  const SamplePath& path(std::size_t i) const { return paths_.at(i); }

  double product_at(std::size_t k) const noexcept {
    double product = 1.0;
    for (const auto& path : paths_) product *= path[k];
    return product;
  }

 private:
  std::vector<SamplePath> paths_;
};

namespace detail {

inline void check_grid(double horizon, std::size_t steps) {
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  if (steps == 0) throw std::invalid_argument("steps must be at least 1");
}

inline double increment_scale(const StabilityIndex& alpha, double horizon,
                              std::size_t steps) {
  return std::pow(horizon / static_cast<double>(steps), 1.0 / alpha.value());
}

}  // namespace detail

template <class Stream>
SamplePath simulate_path(Stream& stream, const StabilityIndex& alpha,
                         double start, double horizon, std::size_t steps) {
  detail::check_grid(horizon, steps);
  const double scale = detail::increment_scale(alpha, horizon, steps);
  std::vector<double> values(steps + 1);
  values[0] = start;
  for (std::size_t k = 1; k <= steps; ++k) {
    values[k] = values[k - 1] + scale * sample_symmetric_stable(stream, alpha);
  }
  return SamplePath(horizon, std::move(values));
}

/// Path built as B(tau(t)): alpha/2-stable subordinator increments with
/// Laplace exponent 2^{alpha/2} dt lambda^{alpha/2}, then Gaussian increments
/// with variance d(tau). The marginals match simulate_path in law.
template <class Stream>
SamplePath simulate_subordinated_path(Stream& stream,
                                      const StabilityIndex& alpha,
                                      double horizon, std::size_t steps) {
  if (alpha.is_gaussian()) {
    throw std::invalid_argument("subordinated representation needs alpha < 2");
  }
  detail::check_grid(horizon, steps);
  const double index = alpha.value() / 2.0;
  const double dt = horizon / static_cast<double>(steps);
  const double clock_scale = std::pow(2.0, index) * dt;
  std::vector<double> values(steps + 1);
  values[0] = 0.0;
  for (std::size_t k = 1; k <= steps; ++k) {
    const double dtau = sample_positive_stable(stream, index, clock_scale);
    values[k] = values[k - 1] + std::sqrt(dtau) * stream.normal();
  }
  return SamplePath(horizon, std::move(values));
}

/// Increments are drawn interleaved: for each step, one draw per coordinate
/// in coordinate order. sup_product_streaming consumes a stream identically.
template <class Stream>
ProductEnsemble simulate_ensemble(Stream& stream, const StabilityIndex& alpha,
                                  std::size_t n, double horizon,
                                  std::size_t steps) {
  detail::check_grid(horizon, steps);
  if (n == 0) throw std::invalid_argument("dimension must be at least 1");
  const double scale = detail::increment_scale(alpha, horizon, steps);
  std::vector<std::vector<double>> values(n, std::vector<double>(steps + 1));
  for (auto& v : values) v[0] = 0.0;
  for (std::size_t k = 1; k <= steps; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      values[i][k] =
          values[i][k - 1] + scale * sample_symmetric_stable(stream, alpha);
    }
  }
  std::vector<SamplePath> paths;
  paths.reserve(n);
  for (auto& v : values) paths.emplace_back(horizon, std::move(v));
  return ProductEnsemble(std::move(paths));
}

/// max_k prod_i values_i[k]; never negative because the k = 0 term is 0.
inline double sup_product(const ProductEnsemble& ensemble) {
  double best = ensemble.product_at(0);
  for (std::size_t k = 1; k <= ensemble.steps(); ++k) {
    best = std::max(best, ensemble.product_at(k));
  }
  return best;
}

/// Result of a streamed supremum: the running maximum when simulation ended
/// and whether it ended early because the stop rule fired.
struct StreamedSup {
  double running_max = 0.0;
  bool stopped_early = false;
};

/// Same functional as sup_product(simulate_ensemble(...)) without storing the
/// paths. `stop` is called with the running maximum after each step; when it
/// returns true the remaining steps are skipped. Stop rules must only fire
/// once every threshold indicator of interest is already decided.
template <class Stream, class StopRule>
StreamedSup sup_product_streaming(Stream& stream, const StabilityIndex& alpha,
                                  std::size_t n, double horizon,
                                  std::size_t steps, StopRule&& stop) {
  detail::check_grid(horizon, steps);
  const double scale = detail::increment_scale(alpha, horizon, steps);
  constexpr std::size_t kInline = 8;
  double inline_buffer[kInline] = {};
  std::vector<double> heap_buffer;
  double* coords = inline_buffer;
  if (n > kInline) {
    heap_buffer.assign(n, 0.0);
    coords = heap_buffer.data();
  }
  StreamedSup result;
  for (std::size_t k = 1; k <= steps; ++k) {
    double product = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      coords[i] += scale * sample_symmetric_stable(stream, alpha);
      product *= coords[i];
    }
    result.running_max = std::max(result.running_max, product);
    if (k < steps && stop(result.running_max)) {
      result.stopped_early = true;
      break;
    }
  }
  return result;
}

/// First grid time with prod_i values_i[k] >= level.
inline std::optional<double> first_entrance_time(const ProductEnsemble& ensemble,
                                                 double level = 1.0) {
  for (std::size_t k = 0; k <= ensemble.steps(); ++k) {
    if (ensemble.product_at(k) >= level) {
      return ensemble.path(0).time_at(k);
    }
  }
  return std::nullopt;
}

/// Grid version of g_t = sup{u <= t : X_u X_{u-} <= 0}. A sign change between
/// grid points k-1 and k is reported at time k; leaving an initial 0 at step 1
/// is the u = 0 boundary and reports 0, as does a path with no sign change.
inline double last_sign_change(const SamplePath& path, double t) {
  const std::size_t last = path.last_index_at_or_before(t);
  for (std::size_t k = last; k >= 1; --k) {
    if (path[k - 1] * path[k] <= 0.0) {
      if (k == 1 && path[0] == 0.0) return 0.0;
      return path.time_at(k);
    }
  }
  return 0.0;
}

/// T_0 = first grid time with value <= 0, for a path started above 0.
inline std::optional<double> first_passage_nonpositive(const SamplePath& path) {
  if (!(path.start() > 0.0)) {
    throw std::invalid_argument("first passage needs a path started above 0");
  }
  for (std::size_t k = 1; k <= path.steps(); ++k) {
    if (path[k] <= 0.0) return path.time_at(k);
  }
  return std::nullopt;
}

/// First grid time in [0, window_end] attaining the running maximum.
inline double argmax_time(const SamplePath& path, double window_end) {
  const std::size_t last = path.last_index_at_or_before(window_end);
  std::size_t best = 0;
  for (std::size_t k = 1; k <= last; ++k) {
    if (path[k] > path[best]) best = k;
  }
  return path.time_at(best);
}

}  // namespace stableprod
