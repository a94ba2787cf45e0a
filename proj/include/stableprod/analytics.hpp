#pragma once

// Closed-form and asymptotic reference values: the Mellin transform of a
// product of |N(0,1)|, the tail of such products by nested quadrature, the
// large-deviation shapes, the exact Pareto product tail, the arcsine law and
// Brownian survival from 1.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "stableprod/errors.hpp"

namespace stableprod {

inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

/// Shape x^p (ln x)^q exp(-c x^e). Only shapes are ever compared against
/// data; the multiplicative constant is left to ratio fits.
struct TailAsymptote {
  struct GaussianRate {
    double coefficient;
    double exponent;
  };

  double power_of_x = 0.0;
  int power_of_log = 0;
  std::optional<GaussianRate> gaussian_rate;

  static TailAsymptote gaussian(int n) {
    const double dim = static_cast<double>(n);
    return {-1.0 / dim, 0, GaussianRate{dim / 2.0, 2.0 / dim}};
  }

  static TailAsymptote stable(int n, double alpha) {
    return {-alpha, n - 1, std::nullopt};
  }

  double operator()(double x) const {
    if (power_of_log > 0 ? !(x > 1.0) : !(x > 0.0)) {
      throw std::invalid_argument("tail shape evaluated outside its domain");
    }
    double value = std::pow(x, power_of_x);
    if (power_of_log != 0) value *= std::pow(std::log(x), power_of_log);
    if (gaussian_rate) {
      value *= std::exp(-gaussian_rate->coefficient *
                        std::pow(x, gaussian_rate->exponent));
    }
    return value;
  }
};

/// E[prod_{i<n} |N_i|^nu] = (2^nu / pi)^{n/2} Gamma((1 + nu) / 2)^n.
inline double mellin_abs_normal_product(double nu, int n) {
  if (!(nu > -1.0)) throw std::invalid_argument("Mellin argument needs nu > -1");
  if (n < 1) throw std::invalid_argument("product needs n >= 1");
  const double one = std::pow(2.0, nu / 2.0) / std::sqrt(std::numbers::pi) *
                     std::tgamma((1.0 + nu) / 2.0);
  return std::pow(one, n);
}

namespace detail {

inline constexpr double kQuadratureTolerance = 1e-9;

inline double abs_normal_product_tail(double x, int n) {
  if (n == 1) return std::erfc(x / std::numbers::sqrt2);
  constexpr double inv_sqrt_2pi =
      std::numbers::inv_sqrtpi / std::numbers::sqrt2;
  // y = e^s: the factor tail_{n-1}(x / y) turns over near y = x on a width
  // that is O(1) in s, whatever the size of x.
  auto integrand = [x, n](double s) {
    const double y = std::exp(s);
    return 2.0 * inv_sqrt_2pi * y * std::exp(-0.5 * y * y) *
           abs_normal_product_tail(x / y, n - 1);
  };
  // |N| beyond 12 carries mass below 1e-32 and below e^-36 less than 1e-15.
  const double top = std::log(12.0);
  const double bottom = std::min(std::log(x), 0.0) - 36.0;
  const double split = std::clamp(std::log(x), bottom, top);
  double value = 0.0;
  double error = 0.0;
  for (const auto& [lo, hi] : {std::pair{bottom, split}, std::pair{split, top}}) {
    if (!(hi > lo)) continue;
    double piece_error = 0.0;
    value += boost::math::quadrature::gauss_kronrod<double, 21>::integrate(
        integrand, lo, hi, 12, 1e-12, &piece_error);
    error += piece_error;
  }
  if (!(error <= kQuadratureTolerance)) {
    throw numerical_failure("product tail quadrature missed tolerance 1e-9; "
                            "achieved error " + std::to_string(error),
                            error);
  }
  return value;
}

}  // namespace detail

/// P(prod_{i<n} |N_i| >= x) for i.i.d. standard normals, n <= 4, using
/// tail_n(x) = E[tail_{n-1}(x / |N|)] with tail_1 = erfc(x / sqrt 2).
inline double brownian_product_tail_oracle(double x, int n) {
  if (!(x > 0.0)) throw std::invalid_argument("tail oracle needs x > 0");
  if (n < 1 || n > 4) throw std::invalid_argument("tail oracle supports 1 <= n <= 4");
  return detail::abs_normal_product_tail(x, n);
}

inline double gaussian_large_dev_shape(double x, int n) {
  return TailAsymptote::gaussian(n)(x);
}

inline double stable_large_dev_shape(double x, int n, double alpha) {
  return TailAsymptote::stable(n, alpha)(x);
}

/// P(XY >= z) for i.i.d. X, Y with P(X >= t) = t^{-nu} on t >= 1.
inline double pareto_product_tail(double z, double nu) {
  if (!(z >= 1.0)) throw std::invalid_argument("Pareto product tail needs z >= 1");
  if (!(nu > 0.0)) throw std::invalid_argument("Pareto index must be positive");
  return std::pow(z, -nu) * (1.0 + nu * std::log(z));
}

/// (2/pi) arcsin(sqrt r), the law of the last zero of Brownian motion on [0,1].
inline double arcsine_cdf(double r) {
  if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("arcsine CDF needs r in [0, 1]");
  return 2.0 / std::numbers::pi * std::asin(std::sqrt(r));
}

/// P_1(T_0 >= t) = 2 Phi(1 / sqrt t) - 1 for a standard Brownian motion.
inline double bm_survival_from_one(double t) {
  if (!(t > 0.0)) throw std::invalid_argument("survival needs t > 0");
  return std::erf(1.0 / std::sqrt(2.0 * t));
}

}  // namespace stableprod
