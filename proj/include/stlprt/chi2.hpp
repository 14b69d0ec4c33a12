#pragma once

#include <cmath>
#include <limits>

#include "stlprt/error.hpp"

namespace stlprt {

/// Regularized lower incomplete gamma P(a, x): series below a+1, Lentz
/// continued fraction for the upper tail otherwise.
inline double regularized_gamma_p(double a, double x) {
  if (a <= 0.0) throw Error("regularized_gamma_p: a must be positive");
  if (x <= 0.0) return 0.0;
  const double log_prefix = -x + a * std::log(x) - std::lgamma(a);
  if (x < a + 1.0) {
    double term = 1.0 / a;
    double sum = term;
    for (int k = 1; k < 10000; ++k) {
      term *= x / (a + k);
      sum += term;
      if (std::fabs(term) < std::fabs(sum) * 1e-17) break;
    }
    return sum * std::exp(log_prefix);
  }
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-17) break;
  }
  return 1.0 - std::exp(log_prefix) * h;
}

inline double chi_squared_cdf(double x, int dof) { return regularized_gamma_p(0.5 * dof, 0.5 * x); }

/// Quantile of the chi-squared distribution by bisection on the CDF,
/// absolute tolerance 1e-10.
inline double chi_squared_quantile(double p, int dof) {
  if (!(p > 0.0 && p < 1.0)) throw Error("chi_squared_quantile: p must lie in (0,1)");
  if (dof < 1) throw Error("chi_squared_quantile: dof must be positive");
  double lo = 0.0;
  double hi = std::max(1.0, static_cast<double>(dof));
  while (chi_squared_cdf(hi, dof) < p) hi *= 2.0;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (chi_squared_cdf(mid, dof) < p)
      lo = mid;
    else
      hi = mid;
    if (mid == lo && mid == hi) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace stlprt
