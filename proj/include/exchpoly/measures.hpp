#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "exchpoly/rays.hpp"

namespace exchpoly {

// Cross moment mu_alpha = E[X_1 ... X_alpha] of the exchangeable vector with
// sum pmf pY: sum_{k>=alpha} C(d-alpha,k-alpha)/C(d,k) p_k.
inline double cross_moment(const SumPmf& pY, int alpha) {
  const int d = pY.d();
  if (alpha < 1 || alpha > d) throw std::domain_error("cross_moment: alpha must be in 1..d");
  double m = 0.0;
  for (int k = alpha; k <= d; ++k) m += binom_shift_ratio(d, k, alpha) * pY[k];
  return m;
}

inline double raw_moment(const SumPmf& pY, int k) {
  if (k < 0) throw std::domain_error("raw_moment: order must be >= 0");
  double m = 0.0;
  for (int i = 0; i <= pY.d(); ++i) m += std::pow(static_cast<double>(i), k) * pY[i];
  return m;
}

// E[Y^2] - (pd + d(d-1) mu_2); vanishes for every valid sum pmf.
inline double second_moment_identity(const SumPmf& pY) {
  const int d = pY.d();
  if (d < 2) throw std::domain_error("second_moment_identity: needs d >= 2");
  const double pd = pY.mean();
  return raw_moment(pY, 2) - (pd + d * (d - 1.0) * cross_moment(pY, 2));
}

// Pairwise correlation rho = (mu_2 - p^2)/(p q) of the exchangeable vector.
inline double correlation_of(const SumPmf& pY) {
  const int d = pY.d();
  if (d < 2) throw std::domain_error("correlation_of: needs d >= 2");
  const double p = pY.mean() / d;
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("correlation_of: degenerate margin (p in {0,1})");
  return (cross_moment(pY, 2) - p * p) / (p * (1.0 - p));
}

inline double mu2_of_rho(double p, double rho) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("mu2_of_rho: p must lie in (0,1)");
  return rho * p * (1.0 - p) + p * p;
}

// Attainable correlation range of the class with margin p. The upper bound
// is always 1 (Frechet ray on {0,d}); the lower bound has two branches.
inline std::pair<double, double> correlation_bounds(int d, double p,
                                                    PdBranch branch = PdBranch::auto_detect) {
  detail::check_dp(d, p);
  if (d < 2) throw std::domain_error("correlation_bounds: needs d >= 2");
  const long long ipd = detail::integer_pd(d, p, branch);
  if (ipd >= 0) return {-1.0 / (d - 1.0), 1.0};
  const double pd = p * static_cast<double>(d);
  const double j1M = std::floor(pd);
  const double mu2_min = (-j1M * (j1M + 1.0) + 2.0 * j1M * pd) / (d * (d - 1.0));
  return {(mu2_min - p * p) / (p * (1.0 - p)), 1.0};
}

// (1/gamma) log E[exp(-gamma Y)]; decreasing in Y.
inline double entropic_risk(const SumPmf& pY, double gamma) {
  if (!(gamma > 0.0)) throw std::domain_error("entropic_risk: gamma must be positive");
  double e = 0.0;
  for (int i = 0; i <= pY.d(); ++i) e += pY[i] * std::exp(-gamma * static_cast<double>(i));
  return std::log(e) / gamma;
}

inline double excess_loss(const SumPmf& pY, double k) {
  double e = 0.0;
  for (int i = 0; i <= pY.d(); ++i) e += std::max(static_cast<double>(i) - k, 0.0) * pY[i];
  return e;
}

// Generalized inverse cdf: smallest support point with P(Y <= y) >= alpha.
inline int quantile(const SumPmf& pY, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("quantile: alpha must lie in (0,1)");
  double cdf = 0.0;
  for (int i = 0; i <= pY.d(); ++i) {
    cdf += pY[i];
    if (cdf >= alpha) return i;
  }
  return pY.d();
}

inline std::pair<int, int> quantile_bounds(int d, double p, double alpha,
                                           PdBranch branch = PdBranch::auto_detect) {
  const std::vector<RayDensity> rays = enumerate_rays(d, p, branch);
  int lo = d;
  int hi = 0;
  for (const RayDensity& r : rays) {
    const int q = quantile(to_sum_pmf(r), alpha);
    lo = std::min(lo, q);
    hi = std::max(hi, q);
  }
  return {lo, hi};
}

// Shannon entropy of the sum pmf, natural log, 0 log 0 := 0.
inline double entropy(const SumPmf& pY) {
  double h = 0.0;
  for (int i = 0; i <= pY.d(); ++i) {
    const double v = pY[i];
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

struct MeasureSpec {
  enum class Kind { cross_moment, raw_moment, entropic_risk, excess_loss, quantile, entropy, correlation };

  Kind kind = Kind::cross_moment;
  double param = 2.0;

  static MeasureSpec cross(int alpha) { return {Kind::cross_moment, static_cast<double>(alpha)}; }
  static MeasureSpec raw(int k) { return {Kind::raw_moment, static_cast<double>(k)}; }
  static MeasureSpec entropic(double gamma) {
    if (!(gamma > 0.0)) throw std::domain_error("MeasureSpec: gamma must be positive");
    return {Kind::entropic_risk, gamma};
  }
  static MeasureSpec excess(double k) { return {Kind::excess_loss, k}; }
  static MeasureSpec quant(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("MeasureSpec: alpha must lie in (0,1)");
    return {Kind::quantile, alpha};
  }
  static MeasureSpec shannon() { return {Kind::entropy, 0.0}; }
  static MeasureSpec corr() { return {Kind::correlation, 0.0}; }

  // Text form used by the CLI: moment:k, rawmoment:k, entropic:g, excess:k,
  // quantile:a, entropy, correlation, mean.
  static MeasureSpec parse(const std::string& text) {
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    const std::string tail = colon == std::string::npos ? std::string() : text.substr(colon + 1);
    auto need_param = [&]() {
      if (tail.empty()) throw std::invalid_argument("measure '" + head + "' needs a parameter");
      return std::stod(tail);
    };
    if (head == "moment") return cross(static_cast<int>(need_param()));
    if (head == "rawmoment") return raw(static_cast<int>(need_param()));
    if (head == "entropic") return entropic(need_param());
    if (head == "excess") return excess(need_param());
    if (head == "quantile") return quant(need_param());
    if (head == "entropy") return shannon();
    if (head == "correlation") return corr();
    if (head == "mean") return cross(1);
    throw std::invalid_argument("unknown measure '" + text + "'");
  }

  std::string name() const {
    switch (kind) {
      case Kind::cross_moment: return "moment:" + std::to_string(static_cast<int>(param));
      case Kind::raw_moment: return "rawmoment:" + std::to_string(static_cast<int>(param));
      case Kind::entropic_risk: return "entropic:" + std::to_string(param);
      case Kind::excess_loss: return "excess:" + std::to_string(param);
      case Kind::quantile: return "quantile:" + std::to_string(param);
      case Kind::entropy: return "entropy";
      case Kind::correlation: return "correlation";
    }
    return "?";
  }

  // True when the measure is affine in the pmf (possibly after a fixed
  // monotone transform), so its distribution over the polytope is exact via
  // simplex frustum volumes.
  bool affine_in_pmf() const {
    return kind == Kind::cross_moment || kind == Kind::raw_moment || kind == Kind::excess_loss ||
           kind == Kind::entropic_risk || kind == Kind::correlation;
  }
};

inline double evaluate(const MeasureSpec& spec, const SumPmf& pY) {
  using K = MeasureSpec::Kind;
  switch (spec.kind) {
    case K::cross_moment: return cross_moment(pY, static_cast<int>(spec.param));
    case K::raw_moment: return raw_moment(pY, static_cast<int>(spec.param));
    case K::entropic_risk: return entropic_risk(pY, spec.param);
    case K::excess_loss: return excess_loss(pY, spec.param);
    case K::quantile: return static_cast<double>(quantile(pY, spec.param));
    case K::entropy: return entropy(pY);
    case K::correlation: return correlation_of(pY);
  }
  throw std::logic_error("evaluate: unhandled measure kind");
}

// Ray extrema of a measure; the sharp polytope bounds for affine measures.
inline std::pair<double, double> measure_ray_extrema(const MeasureSpec& spec,
                                                     const std::vector<RayDensity>& rays) {
  if (rays.empty()) throw std::invalid_argument("measure_ray_extrema: no rays");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const RayDensity& r : rays) {
    const double v = evaluate(spec, to_sum_pmf(r));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

}  // namespace exchpoly
