#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <utility>

namespace gccg {

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

/// log(exp(a) + exp(b)).
inline double log_add(double a, double b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

/// Max-shifted log-sum-exp, accumulated left to right.
inline double log_sum_exp(std::span<const double> xs) {
  double m = kLogZero;
  for (double x : xs) m = x > m ? x : m;
  if (m == kLogZero) return kLogZero;
  if (std::isinf(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

/// Reentrant log-gamma (std::lgamma writes the global signgam).
double log_gamma(double x);

/// log Gamma(x + n) - log Gamma(x), i.e. the log rising factorial.
inline double log_rising(double x, double n) { return log_gamma(x + n) - log_gamma(x); }

}  // namespace gccg
