#pragma once

// Monte Carlo estimation of persistence and upper-tail probabilities of
// S_n = sup_{u <= 1} prod_i Z_u^{(i)}, exponent regression, discretization
// refinement checks and the symmetry sandwich. Also the single-path
// experiments: survival of T_0 and the law of g_1.
//
// Every threshold list is evaluated on one set of simulated ensembles (common
// random numbers), which makes the estimated curves exactly monotone.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
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

// ---------------------------------------------------------------------------
// Binomial estimates

/// Wilson score interval for k successes in n trials at normal quantile z.
inline std::pair<double, double> wilson_interval(std::uint64_t successes,
                                                 std::uint64_t trials,
                                                 double z) {
  if (trials == 0) throw std::invalid_argument("Wilson interval needs trials > 0");
  if (successes > trials) {
    throw std::invalid_argument("successes exceed trials");
  }
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half =
      z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  double low = successes == 0 ? 0.0 : std::clamp(center - half, 0.0, p);
  double high = successes == trials ? 1.0 : std::clamp(center + half, p, 1.0);
  return {low, high};
}

struct BernoulliEstimate {
  std::uint64_t successes = 0;
  std::uint64_t trials = 0;
  double p_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double z = 1.96;

  static BernoulliEstimate from_counts(std::uint64_t successes,
                                       std::uint64_t trials, double z = 1.96) {
    const auto [low, high] = wilson_interval(successes, trials, z);
    return {successes, trials,
            static_cast<double>(successes) / static_cast<double>(trials), low,
            high, z};
  }

  /// Half-width of the Wilson interval in units of z. Matches the binomial
  /// standard error for moderate counts and stays positive at 0 and n.
  double standard_error() const { return (ci_high - ci_low) / (2.0 * z); }

  BernoulliEstimate merged(const BernoulliEstimate& other) const {
    return from_counts(successes + other.successes, trials + other.trials, z);
  }
};

struct ThresholdEstimate {
  double threshold = 0.0;
  BernoulliEstimate estimate;
};

inline bool has_zero_count(std::span<const ThresholdEstimate> curve) {
  return std::any_of(curve.begin(), curve.end(), [](const auto& row) {
    return row.estimate.successes == 0;
  });
}

// ---------------------------------------------------------------------------
// Simulation configuration

/// unit: characteristic function exp(-t|lambda|^alpha) (variance 2t at alpha 2).
/// standard_brownian: alpha = 2 only; every path is rescaled by 2^{-1/2} so the
/// coordinates are standard Brownian motions.
enum class Units { unit, standard_brownian };

struct SimulationConfig {
  StabilityIndex alpha{1.0};
  std::size_t dimension = 1;
  std::size_t steps = 4096;
  std::uint64_t samples = 100000;
  std::uint64_t seed = 42;
  unsigned workers = 1;
  Units units = Units::unit;

  void validate() const {
    if (dimension == 0) throw std::invalid_argument("n must be at least 1");
    if (steps == 0) throw std::invalid_argument("steps must be at least 1");
    if (samples == 0) throw std::invalid_argument("samples must be positive");
    if (units == Units::standard_brownian && !alpha.is_gaussian()) {
      throw std::invalid_argument("standard Brownian units need alpha = 2");
    }
  }

  /// Factor applied to a single coordinate.
  double coordinate_scale() const {
    return units == Units::standard_brownian ? 1.0 / std::numbers::sqrt2 : 1.0;
  }

  /// Factor applied to a product of `dimension` coordinates.
  double product_scale() const {
    return std::pow(coordinate_scale(), static_cast<double>(dimension));
  }
};

enum class Direction { at_most, at_least };

namespace detail {

inline void check_thresholds(std::span<const double> thresholds,
                             bool decreasing, const char* name) {
  if (thresholds.empty()) {
    throw std::invalid_argument(std::string(name) + " list is empty");
  }
  for (std::size_t j = 0; j < thresholds.size(); ++j) {
    if (!(thresholds[j] > 0.0)) {
      throw std::invalid_argument(std::string(name) + " values must be positive");
    }
    if (j > 0 && (decreasing ? !(thresholds[j] < thresholds[j - 1])
                             : !(thresholds[j] > thresholds[j - 1]))) {
      throw std::invalid_argument(std::string(name) + " values must be strictly " +
                                  (decreasing ? "decreasing" : "increasing"));
    }
  }
}

inline bool indicator(double value, double threshold, Direction direction) {
  return direction == Direction::at_most ? value <= threshold
                                         : value >= threshold;
}

inline std::vector<ThresholdEstimate> to_curve(
    std::span<const double> thresholds, std::span<const std::uint64_t> counts,
    std::uint64_t trials) {
  std::vector<ThresholdEstimate> curve;
  curve.reserve(thresholds.size());
  for (std::size_t j = 0; j < thresholds.size(); ++j) {
    curve.push_back({thresholds[j],
                     BernoulliEstimate::from_counts(counts[j], trials)});
  }
  return curve;
}

}  // namespace detail

/// Per-threshold counts of {S_n <= t} (at_most) or {S_n >= t} (at_least) over
/// samples [first, first + count), thresholds in the configured units. A path
/// stops as soon as its running supremum passes the largest threshold.
inline std::vector<std::uint64_t> count_sup_thresholds(
    const SimulationConfig& config, std::span<const double> thresholds,
    Direction direction, std::uint64_t first, std::uint64_t count) {
  config.validate();
  const double scale = config.product_scale();
  const double largest = *std::max_element(thresholds.begin(), thresholds.end());
  return sum_counts(
      first, first + count, config.workers, thresholds.size(),
      [&](std::uint64_t lo, std::uint64_t hi) {
        std::vector<std::uint64_t> counts(thresholds.size(), 0);
        for (std::uint64_t i = lo; i < hi; ++i) {
          auto stream = substream(config.seed, i);
          // Past the largest threshold every indicator is already decided.
          auto stop = [&](double running_max) {
            return direction == Direction::at_most ? running_max * scale > largest
                                                   : running_max * scale >= largest;
          };
          const auto sup = sup_product_streaming(stream, config.alpha,
                                                 config.dimension, 1.0,
                                                 config.steps, stop);
          const double value = sup.running_max * scale;
          for (std::size_t j = 0; j < thresholds.size(); ++j) {
            counts[j] += detail::indicator(value, thresholds[j], direction);
          }
        }
        return counts;
      });
}

/// P(S_n <= eps) for a strictly decreasing list of eps.
inline std::vector<ThresholdEstimate> estimate_persistence(
    const SimulationConfig& config, std::span<const double> epsilons) {
  detail::check_thresholds(epsilons, true, "epsilon");
  if (config.samples < 1000) {
    throw std::invalid_argument("persistence estimates need samples >= 1000");
  }
  const auto counts = count_sup_thresholds(config, epsilons, Direction::at_most,
                                           0, config.samples);
  return detail::to_curve(epsilons, counts, config.samples);
}

/// P(S_n >= x) for a strictly increasing list of x.
inline std::vector<ThresholdEstimate> estimate_upper_tail(
    const SimulationConfig& config, std::span<const double> xs) {
  detail::check_thresholds(xs, false, "x");
  if (config.samples < 1000) {
    throw std::invalid_argument("tail estimates need samples >= 1000");
  }
  const auto counts =
      count_sup_thresholds(config, xs, Direction::at_least, 0, config.samples);
  return detail::to_curve(xs, counts, config.samples);
}

/// Full grid suprema S_n (configured units), one per sample, in sample order.
/// Lets one ensemble feed both a persistence and a tail curve.
inline std::vector<double> sample_sup_products(const SimulationConfig& config) {
  config.validate();
  const double scale = config.product_scale();
  std::vector<double> sups(config.samples);
  for_each_chunk(0, config.samples, config.workers,
                 [&](std::uint64_t lo, std::uint64_t hi, std::uint64_t) {
                   for (std::uint64_t i = lo; i < hi; ++i) {
                     auto stream = substream(config.seed, i);
                     const auto sup = sup_product_streaming(
                         stream, config.alpha, config.dimension, 1.0,
                         config.steps, [](double) { return false; });
                     sups[i] = sup.running_max * scale;
                   }
                 });
  return sups;
}

inline std::vector<ThresholdEstimate> curve_from_samples(
    std::span<const double> values, std::span<const double> thresholds,
    Direction direction) {
  if (values.empty()) throw std::invalid_argument("no samples");
  std::vector<std::uint64_t> counts(thresholds.size(), 0);
  for (double v : values) {
    for (std::size_t j = 0; j < thresholds.size(); ++j) {
      counts[j] += detail::indicator(v, thresholds[j], direction);
    }
  }
  return detail::to_curve(thresholds, counts, values.size());
}

// ---------------------------------------------------------------------------
// Regression

struct WeightedFit {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd standard_errors;
  double r_squared = 0.0;
};

/// Weighted least squares with known per-point variances 1 / weights.
inline WeightedFit weighted_least_squares(const Eigen::MatrixXd& design,
                                          const Eigen::VectorXd& response,
                                          const Eigen::VectorXd& weights) {
  const Eigen::VectorXd root_w = weights.array().sqrt();
  const Eigen::MatrixXd a = root_w.asDiagonal() * design;
  const Eigen::VectorXd b = root_w.cwiseProduct(response);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() < design.cols()) {
    throw std::invalid_argument("regression design is collinear");
  }
  WeightedFit fit;
  fit.coefficients = qr.solve(b);
  const Eigen::MatrixXd normal = a.transpose() * a;
  fit.standard_errors = normal.inverse().diagonal().array().sqrt();
  const Eigen::VectorXd residual = b - a * fit.coefficients;
  const double mean = weights.dot(response) / weights.sum();
  const double total =
      (weights.array() * (response.array() - mean).square()).sum();
  const double ssr = residual.squaredNorm();
  fit.r_squared = total > 0.0 ? std::clamp(1.0 - ssr / total, 0.0, 1.0)
                              : (ssr <= 1e-24 ? 1.0 : 0.0);
  return fit;
}

/// ln p = intercept + theta ln(scale) [+ beta ln|ln scale|].
struct ExponentFit {
  double theta = 0.0;
  double beta = 0.0;
  double intercept = 0.0;
  double stderr_theta = 0.0;
  double stderr_beta = 0.0;
  double r_squared = 0.0;
  bool includes_log_term = false;
  std::size_t points = 0;
};

/// Weighted least squares of ln p_hat on ln(scale) and optionally
/// ln|ln scale|. Weights are the delta-method precisions n p / (1 - p),
/// capped at n^2 when p_hat = 1.
inline ExponentFit fit_exponent(std::span<const ThresholdEstimate> points,
                                bool include_log_term) {
  if (points.size() < 4) {
    throw std::invalid_argument("exponent fit needs at least 4 points");
  }
  const auto rows = static_cast<Eigen::Index>(points.size());
  const Eigen::Index cols = include_log_term ? 3 : 2;
  Eigen::MatrixXd design(rows, cols);
  Eigen::VectorXd response(rows);
  Eigen::VectorXd weights(rows);
  bool all_equal = true;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& point = points[static_cast<std::size_t>(r)];
    if (!(point.threshold > 0.0)) {
      throw std::invalid_argument("exponent fit needs positive scales");
    }
    if (point.estimate.successes == 0) {
      throw numerical_failure("exponent fit refuses zero counts (threshold " +
                              std::to_string(point.threshold) + ")");
    }
    all_equal = all_equal && point.threshold == points.front().threshold;
    const double log_scale = std::log(point.threshold);
    design(r, 0) = 1.0;
    design(r, 1) = log_scale;
    if (include_log_term) {
      if (log_scale == 0.0) {
        throw std::invalid_argument("log correction undefined at scale 1");
      }
      design(r, 2) = std::log(std::fabs(log_scale));
    }
    const double p = point.estimate.p_hat;
    const double n = static_cast<double>(point.estimate.trials);
    response(r) = std::log(p);
    weights(r) = p < 1.0 ? n * p / (1.0 - p) : n * n;
  }
  if (all_equal) throw std::invalid_argument("exponent fit design is collinear");
  const auto fit = weighted_least_squares(design, response, weights);
  ExponentFit result;
  result.intercept = fit.coefficients(0);
  result.theta = fit.coefficients(1);
  result.stderr_theta = fit.standard_errors(1);
  if (include_log_term) {
    result.beta = fit.coefficients(2);
    result.stderr_beta = fit.standard_errors(2);
  }
  result.r_squared = fit.r_squared;
  result.includes_log_term = include_log_term;
  result.points = points.size();
  return result;
}

// ---------------------------------------------------------------------------
// Discretization and sandwich checks

struct RefinementReport {
  std::size_t coarse_steps = 0;
  std::size_t fine_steps = 0;
  BernoulliEstimate coarse;
  BernoulliEstimate fine;

  double gap() const { return fine.p_hat - coarse.p_hat; }
  double relative_gap() const {
    return coarse.p_hat > 0.0 ? std::fabs(gap()) / coarse.p_hat : 0.0;
  }
  double combined_stderr() const {
    return std::hypot(coarse.standard_error(), fine.standard_error());
  }
};

/// The same estimates at `steps` and `2 * steps` for every threshold, each
/// level on common random numbers. The fine run draws fresh paths from a
/// derived seed, so the comparison is in distribution only.
inline std::vector<RefinementReport> refinement_curve(const SimulationConfig& config,
                                                      std::span<const double> thresholds,
                                                      Direction direction) {
  detail::check_thresholds(thresholds, direction == Direction::at_most, "threshold");
  SimulationConfig fine = config;
  fine.steps = 2 * config.steps;
  fine.seed = derive_seed(config.seed, fine.steps);
  const auto coarse_counts =
      count_sup_thresholds(config, thresholds, direction, 0, config.samples);
  const auto fine_counts =
      count_sup_thresholds(fine, thresholds, direction, 0, fine.samples);
  std::vector<RefinementReport> reports;
  for (std::size_t j = 0; j < thresholds.size(); ++j) {
    RefinementReport report;
    report.coarse_steps = config.steps;
    report.fine_steps = fine.steps;
    report.coarse = BernoulliEstimate::from_counts(coarse_counts[j], config.samples);
    report.fine = BernoulliEstimate::from_counts(fine_counts[j], fine.samples);
    reports.push_back(report);
  }
  return reports;
}

inline RefinementReport refinement_report(const SimulationConfig& config,
                                          double threshold,
                                          Direction direction) {
  if (!(threshold > 0.0)) throw std::invalid_argument("threshold must be positive");
  const double single[] = {threshold};
  return refinement_curve(config, single, direction).front();
}

struct SandwichReport {
  double x = 0.0;
  std::size_t dimension = 0;
  BernoulliEstimate sup_product;    ///< P(S_n >= x)
  BernoulliEstimate end_product;    ///< P(prod Z_1 >= x)
  BernoulliEstimate product_of_sups;  ///< P(prod sup Z >= x)
  std::uint64_t lower_violations = 0;  ///< paths with S_n < prod Z_1
  bool upper_holds = false;
  /// P(S_n >= x) - 2 P(prod Z_1 >= x); vanishes for n = 1 at alpha = 2
  /// (reflection principle).
  double reflection_gap = 0.0;
  double reflection_stderr = 0.0;

  bool lower_holds() const { return lower_violations == 0; }
};

/// Lower bound S_n >= prod Z_1 path by path, and the distributional upper bound
/// P(S_n >= x) <= 2^n P(prod_i sup Z^{(i)} >= x) up to 3 combined standard
/// errors, all on common ensembles.
inline SandwichReport sandwich_check(const SimulationConfig& config, double x) {
  config.validate();
  if (!(x > 0.0)) throw std::invalid_argument("sandwich level must be positive");
  const std::size_t n = config.dimension;
  const double coord_scale = config.coordinate_scale();
  const double increment = detail::increment_scale(config.alpha, 1.0, config.steps);
  // counts: sup >= x, end >= x, product of sups >= x, lower violations
  const auto counts = sum_counts(
      0, config.samples, config.workers, 4,
      [&](std::uint64_t lo, std::uint64_t hi) {
        std::vector<std::uint64_t> c(4, 0);
        std::vector<double> coords(n);
        std::vector<double> maxima(n);
        for (std::uint64_t i = lo; i < hi; ++i) {
          auto stream = substream(config.seed, i);
          std::fill(coords.begin(), coords.end(), 0.0);
          std::fill(maxima.begin(), maxima.end(), 0.0);
          double sup = 0.0;
          double last_product = 0.0;
          for (std::size_t k = 1; k <= config.steps; ++k) {
            double product = 1.0;
            for (std::size_t j = 0; j < n; ++j) {
              coords[j] += increment * sample_symmetric_stable(stream, config.alpha);
              maxima[j] = std::max(maxima[j], coords[j]);
              product *= coords[j];
            }
            sup = std::max(sup, product);
            last_product = product;
          }
          double end_product = 1.0;
          double sup_product = 1.0;
          for (std::size_t j = 0; j < n; ++j) {
            end_product *= coords[j] * coord_scale;
            sup_product *= maxima[j] * coord_scale;
          }
          double scaled_sup = sup;
          for (std::size_t j = 0; j < n; ++j) scaled_sup *= coord_scale;
          c[0] += scaled_sup >= x;
          c[1] += end_product >= x;
          c[2] += sup_product >= x;
          c[3] += sup < last_product;
        }
        return c;
      });
  SandwichReport report;
  report.x = x;
  report.dimension = n;
  report.sup_product = BernoulliEstimate::from_counts(counts[0], config.samples);
  report.end_product = BernoulliEstimate::from_counts(counts[1], config.samples);
  report.product_of_sups = BernoulliEstimate::from_counts(counts[2], config.samples);
  report.lower_violations = counts[3];
  const double factor = std::pow(2.0, static_cast<double>(n));
  const double upper_stderr =
      std::hypot(report.sup_product.standard_error(),
                 factor * report.product_of_sups.standard_error());
  report.upper_holds = report.sup_product.p_hat <=
                       factor * report.product_of_sups.p_hat + 3.0 * upper_stderr;
  report.reflection_gap = report.sup_product.p_hat - 2.0 * report.end_product.p_hat;
  report.reflection_stderr = std::hypot(report.sup_product.standard_error(),
                                        2.0 * report.end_product.standard_error());
  return report;
}

// ---------------------------------------------------------------------------
// Single-path experiments

/// Grid survival P(T_0 >= t) for a path started at `start` (configured units),
/// monitored on [0, max t] with config.steps steps. Paths stop at T_0.
inline std::vector<ThresholdEstimate> estimate_survival(
    const SimulationConfig& config, double start, std::span<const double> times) {
  config.validate();
  detail::check_thresholds(times, false, "time");
  if (!(start > 0.0)) throw std::invalid_argument("survival needs start > 0");
  const double horizon = times.back();
  const double unit_start = start / config.coordinate_scale();
  const double increment =
      detail::increment_scale(config.alpha, horizon, config.steps);
  const double dt = horizon / static_cast<double>(config.steps);
  const auto counts = sum_counts(
      0, config.samples, config.workers, times.size(),
      [&](std::uint64_t lo, std::uint64_t hi) {
        std::vector<std::uint64_t> c(times.size(), 0);
        for (std::uint64_t i = lo; i < hi; ++i) {
          auto stream = substream(config.seed, i);
          double value = unit_start;
          std::optional<double> passage;
          for (std::size_t k = 1; k <= config.steps; ++k) {
            value += increment * sample_symmetric_stable(stream, config.alpha);
            if (value <= 0.0) {
              passage = dt * static_cast<double>(k);
              break;
            }
          }
          for (std::size_t j = 0; j < times.size(); ++j) {
            c[j] += !passage || *passage >= times[j];
          }
        }
        return c;
      });
  return detail::to_curve(times, counts, config.samples);
}

/// Upward bias bound for grid-monitored Brownian survival from `start`
/// (standard units): discrete monitoring acts like a barrier shifted down by
/// about 0.5826 sqrt(dt), so the margin is the survival gain from that shift.
inline double brownian_survival_grid_margin(double start, double t, double dt) {
  constexpr double kShift = 0.5825971579390106;  // -zeta(1/2) / sqrt(2 pi)
  const double shifted = start + kShift * std::sqrt(dt);
  return std::erf(shifted / std::sqrt(2.0 * t)) - std::erf(start / std::sqrt(2.0 * t));
}

/// g_1 for each sample path on [0, 1], in sample order. Same convention as
/// last_sign_change(simulate_path(stream, alpha, 0, 1, steps), 1).
inline std::vector<double> sample_last_sign_change(const SimulationConfig& config) {
  config.validate();
  const double increment = detail::increment_scale(config.alpha, 1.0, config.steps);
  std::vector<double> result(config.samples);
  for_each_chunk(0, config.samples, config.workers,
                 [&](std::uint64_t lo, std::uint64_t hi, std::uint64_t) {
                   for (std::uint64_t i = lo; i < hi; ++i) {
                     auto stream = substream(config.seed, i);
                     double previous = 0.0;
                     std::size_t last = 0;
                     for (std::size_t k = 1; k <= config.steps; ++k) {
                       const double value =
                           previous + increment *
                                          sample_symmetric_stable(stream, config.alpha);
                       if (k > 1 && previous * value <= 0.0) last = k;
                       previous = value;
                     }
                     result[i] = static_cast<double>(last) /
                                 static_cast<double>(config.steps);
                   }
                 });
  return result;
}

struct DensityBin {
  double lo = 0.0;
  double hi = 0.0;
  std::uint64_t count = 0;
  double width = 0.0;
  double density = 0.0;
};

struct DensitySlopeFit {
  std::vector<DensityBin> bins;
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  double r_squared = 0.0;
};

/// Histogram on log-spaced bins of [r_lo, r_hi) and a weighted fit of
/// ln density against ln r at the geometric bin centres. With grid_step > 0
/// the samples live on the grid k * grid_step, and each bin width is the
/// number of grid points it holds times grid_step.
inline DensitySlopeFit fit_density_slope(std::span<const double> samples,
                                         double r_lo, double r_hi,
                                         std::size_t bins, double grid_step) {
  if (!(r_lo > 0.0 && r_hi > r_lo)) {
    throw std::invalid_argument("density bins need 0 < r_lo < r_hi");
  }
  if (bins < 2) throw std::invalid_argument("density fit needs at least 2 bins");
  if (samples.empty()) throw std::invalid_argument("density fit needs samples");
  DensitySlopeFit fit;
  const double ratio = std::pow(r_hi / r_lo, 1.0 / static_cast<double>(bins));
  for (std::size_t b = 0; b < bins; ++b) {
    DensityBin bin;
    bin.lo = r_lo * std::pow(ratio, static_cast<double>(b));
    bin.hi = b + 1 == bins ? r_hi : r_lo * std::pow(ratio, static_cast<double>(b + 1));
    if (grid_step > 0.0) {
      const double first = std::ceil(bin.lo / grid_step - 1e-9);
      const double past = std::ceil(bin.hi / grid_step - 1e-9);
      bin.width = (past - first) * grid_step;
      if (bin.width <= 0.0) {
        throw std::invalid_argument("density bin holds no grid point");
      }
    } else {
      bin.width = bin.hi - bin.lo;
    }
    fit.bins.push_back(bin);
  }
  for (double s : samples) {
    if (!(s >= r_lo && s < r_hi)) continue;
    // Bins are half-open; find by scanning since bins are few.
    for (auto& bin : fit.bins) {
      if (s >= bin.lo && s < bin.hi) {
        ++bin.count;
        break;
      }
    }
  }
  const auto rows = static_cast<Eigen::Index>(bins);
  Eigen::MatrixXd design(rows, 2);
  Eigen::VectorXd response(rows);
  Eigen::VectorXd weights(rows);
  const double total = static_cast<double>(samples.size());
  for (Eigen::Index r = 0; r < rows; ++r) {
    auto& bin = fit.bins[static_cast<std::size_t>(r)];
    if (bin.count == 0) {
      throw numerical_failure("density bin [" + std::to_string(bin.lo) + ", " +
                              std::to_string(bin.hi) + ") is empty");
    }
    bin.density = static_cast<double>(bin.count) / (total * bin.width);
    design(r, 0) = 1.0;
    design(r, 1) = 0.5 * (std::log(bin.lo) + std::log(bin.hi));
    response(r) = std::log(bin.density);
    weights(r) = static_cast<double>(bin.count);
  }
  const auto wls = weighted_least_squares(design, response, weights);
  fit.intercept = wls.coefficients(0);
  fit.slope = wls.coefficients(1);
  fit.stderr_slope = wls.standard_errors(1);
  fit.r_squared = wls.r_squared;
  return fit;
}

/// Empirical P(value <= r).
inline BernoulliEstimate empirical_cdf(std::span<const double> values, double r) {
  const auto hits = static_cast<std::uint64_t>(
      std::count_if(values.begin(), values.end(), [r](double v) { return v <= r; }));
  return BernoulliEstimate::from_counts(hits, values.size());
}

// ---------------------------------------------------------------------------
// Brute-force references for the closed forms

struct MomentEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::uint64_t samples = 0;
};

/// Sample mean of prod_{i<n} |N_i|^nu over `samples` draws, draw j from
/// substream(seed, j).
inline MomentEstimate mellin_monte_carlo(double nu, int n, std::uint64_t samples,
                                         std::uint64_t seed, unsigned workers = 1) {
  if (!(nu > -1.0)) throw std::invalid_argument("Mellin argument needs nu > -1");
  if (n < 1) throw std::invalid_argument("product needs n >= 1");
  if (samples < 2) throw std::invalid_argument("moment estimate needs samples >= 2");
  using Sums = std::pair<double, double>;
  const auto sums = reduce_chunks(
      0, samples, workers, Sums{0.0, 0.0},
      [&](std::uint64_t lo, std::uint64_t hi) {
        Sums part{0.0, 0.0};
        for (std::uint64_t j = lo; j < hi; ++j) {
          auto stream = substream(seed, j);
          double product = 1.0;
          for (int i = 0; i < n; ++i) product *= std::fabs(stream.normal());
          const double value = std::pow(product, nu);
          part.first += value;
          part.second += value * value;
        }
        return part;
      },
      [](const Sums& a, const Sums& b) {
        return Sums{a.first + b.first, a.second + b.second};
      });
  const double count = static_cast<double>(samples);
  const double mean = sums.first / count;
  const double variance =
      std::max(0.0, (sums.second - count * mean * mean) / (count - 1.0));
  return {mean, std::sqrt(variance / count), samples};
}

/// P(XY >= z) for i.i.d. Pareto(nu) X, Y on [1, inf), estimated from
/// `samples` pairs X = U^{-1/nu}; all z on the same pairs.
inline std::vector<ThresholdEstimate> pareto_product_monte_carlo(
    double nu, std::span<const double> zs, std::uint64_t samples,
    std::uint64_t seed, unsigned workers = 1) {
  if (!(nu > 0.0)) throw std::invalid_argument("Pareto index must be positive");
  detail::check_thresholds(zs, false, "z");
  if (zs.front() < 1.0) throw std::invalid_argument("Pareto product tail needs z >= 1");
  if (samples == 0) throw std::invalid_argument("samples must be positive");
  const auto counts = sum_counts(
      0, samples, workers, zs.size(), [&](std::uint64_t lo, std::uint64_t hi) {
        std::vector<std::uint64_t> c(zs.size(), 0);
        for (std::uint64_t j = lo; j < hi; ++j) {
          auto stream = substream(seed, j);
          const double x = std::pow(stream.uniform(), -1.0 / nu);
          const double y = std::pow(stream.uniform(), -1.0 / nu);
          for (std::size_t k = 0; k < zs.size(); ++k) c[k] += x * y >= zs[k];
        }
        return c;
      });
  return detail::to_curve(zs, counts, samples);
}

}  // namespace stableprod
