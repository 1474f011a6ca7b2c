#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace exchpoly {

// Binomial coefficient as a double. Exact while the result fits in 53 bits,
// monotone overflow to +inf afterwards (around C(1030, 515)).
inline double binom(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  if (k > n - k) k = n - k;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

inline double log_binom(int n, int k) {
  if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// C(d-alpha, k-alpha) / C(d, k) computed as prod_{i=0}^{alpha-1} (k-i)/(d-i).
// Stable for any d, including very large ones where binom() overflows.
inline double binom_shift_ratio(int d, int k, int alpha) {
  if (k < alpha) return 0.0;
  double r = 1.0;
  for (int i = 0; i < alpha; ++i) r *= static_cast<double>(k - i) / static_cast<double>(d - i);
  return r;
}

namespace detail {

inline double gamma_p_series(double s, double x) {
  double ap = s;
  double sum = 1.0 / s;
  double del = sum;
  for (int i = 0; i < 1000; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + s * std::log(x) - std::lgamma(s));
}

inline double gamma_q_contfrac(double s, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - s;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 1000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - s);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + s * std::log(x) - std::lgamma(s));
}

}  // namespace detail

// Regularized upper incomplete gamma Q(s, x), relative accuracy ~1e-14.
inline double gamma_q(double s, double x) {
  if (s <= 0.0) throw std::domain_error("gamma_q: shape must be positive");
  if (x < 0.0) throw std::domain_error("gamma_q: x must be nonnegative");
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < s + 1.0) return 1.0 - detail::gamma_p_series(s, x);
  return detail::gamma_q_contfrac(s, x);
}

// P(X > x) for X ~ chi-square with df degrees of freedom.
inline double chi_square_upper_tail(double df, double x) { return gamma_q(df / 2.0, x / 2.0); }

}  // namespace exchpoly
