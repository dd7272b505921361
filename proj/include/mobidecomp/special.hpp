#ifndef MOBIDECOMP_SPECIAL_HPP
#define MOBIDECOMP_SPECIAL_HPP

#include <cmath>
#include <string>

#include "mobidecomp/common.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace mobi::math {

inline double logistic(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// softplus(x) = ln(1 + e^x), overflow-safe.
inline double softplus(double x) {
  if (x > 30.0) return x;
  return std::log1p(std::exp(x));
}

/// Regularized lower incomplete gamma P(a, x). Arguments outside the domain
/// (or overflowed to inf) surface as evaluation errors rather than Boost
/// exceptions so samplers can treat them as divergences.
inline double gamma_p(double a, double x) {
  if (!(a > 0.0) || !std::isfinite(a) || !std::isfinite(x)) {
    throw mobi::Error(mobi::ErrorKind::evaluation_error,
                      "gamma_p outside its domain (a=" + std::to_string(a) +
                          ", x=" + std::to_string(x) + ")");
  }
  if (x <= 0.0) return 0.0;
  return boost::math::gamma_p(a, x);
}

/// d/dx P(a, x) = x^(a-1) e^(-x) / Gamma(a).
inline double gamma_p_dx(double a, double x) {
  if (x <= 0.0) return 0.0;
  return std::exp((a - 1.0) * std::log(x) - x - std::lgamma(a));
}

/// d/da P(a, x), central difference. P is analytic in a, so the O(h^2)
/// truncation error at this h is far below the gradient tolerances used
/// here. The step shrinks near a = 0 to stay inside the domain.
inline double gamma_p_da(double a, double x) {
  const double h = std::min(1e-5 * (1.0 + std::fabs(a)), 0.5 * a);
  return (gamma_p(a + h, x) - gamma_p(a - h, x)) / (2.0 * h);
}

/// Student-t log density with nu = 4, location mu, scale sigma.
inline double student_t4_lpdf(double x, double mu, double sigma) {
  // ln Gamma(2.5) - ln Gamma(2) - 0.5 ln(4 pi) = ln(3/8)
  constexpr double kNorm = -0.98082925301172619;  // ln(3/8)
  const double z = (x - mu) / sigma;
  return kNorm - std::log(sigma) - 2.5 * std::log1p(z * z / 4.0);
}

/// Two-sided p-value of a t statistic with (possibly fractional) df.
inline double student_t_p_two_sided(double t, double df) {
  const boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(dist, -std::fabs(t));
}

inline double chi_squared_quantile(double df, double p) {
  return boost::math::quantile(boost::math::chi_squared(df), p);
}

inline double chi_squared_sf(double df, double x) {
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(df), x));
}

}  // namespace mobi::math

#endif  // MOBIDECOMP_SPECIAL_HPP
