#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "exchpoly/pmf.hpp"

namespace exchpoly {

// Whether p*d is treated as an integer. The closed forms differ on the two
// branches and the detection tolerance is relative (1e-9), so degenerate
// inputs like p = 1/3, d = 3 land on the integer branch; callers may force
// either one.
enum class PdBranch { auto_detect, integer, non_integer };

// Extremal point of the polytope of sum pmfs with mean p*d: either a
// two-point density on (j1, j2) straddling p*d, or the point mass at p*d.
struct RayDensity {
  int d = 0;
  int j1 = 0;
  int j2 = 0;         // j1 == j2 marks the point mass at p*d
  double mass1 = 0.0;
  double mass2 = 0.0; // 0 for the point mass

  bool is_point_mass() const { return j1 == j2; }
  double mean() const {
    return is_point_mass() ? static_cast<double>(j1) : j1 * mass1 + j2 * mass2;
  }
};

namespace detail {

inline void check_dp(int d, double p) {
  if (d < 1) throw std::domain_error("d must be >= 1");
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("p must lie in (0, 1)");
}

// Rounded p*d when the integer branch applies, -1 otherwise.
inline long long integer_pd(int d, double p, PdBranch branch) {
  const double pd = p * static_cast<double>(d);
  const long long rounded = std::llround(pd);
  const bool near = std::fabs(pd - static_cast<double>(rounded)) <= 1e-9 * std::max(1.0, pd);
  switch (branch) {
    case PdBranch::integer:
      if (rounded < 1 || rounded > d - 1 ||
          std::fabs(pd - static_cast<double>(rounded)) > 1e-6 * std::max(1.0, pd))
        throw std::domain_error("integer branch requires p*d at an integer in {1,...,d-1}");
      return rounded;
    case PdBranch::non_integer:
      return -1;
    case PdBranch::auto_detect:
    default:
      return (near && rounded >= 1 && rounded <= d - 1) ? rounded : -1;
  }
}

}  // namespace detail

inline std::size_t ray_count(int d, double p, PdBranch branch = PdBranch::auto_detect) {
  detail::check_dp(d, p);
  const long long ipd = detail::integer_pd(d, p, branch);
  if (ipd >= 0) {
    // d^2 p(1-p) + 1 = pd (d - pd) + 1 on the integer branch
    return static_cast<std::size_t>(ipd * (d - ipd) + 1);
  }
  const double pd = p * static_cast<double>(d);
  const long long j1M = static_cast<long long>(std::floor(pd));
  return static_cast<std::size_t>((j1M + 1) * (d - j1M));
}

// All extremal rays, ordered lexicographically in (j1, j2) with the point
// mass (integer p*d only) last. The two-point masses come straight from the
// closed form (j2 - pd)/(j2 - j1) and (pd - j1)/(j2 - j1).
inline std::vector<RayDensity> enumerate_rays(int d, double p,
                                              PdBranch branch = PdBranch::auto_detect) {
  detail::check_dp(d, p);
  const long long ipd = detail::integer_pd(d, p, branch);
  const double pd = (ipd >= 0) ? static_cast<double>(ipd) : p * static_cast<double>(d);
  const int j1M = (ipd >= 0) ? static_cast<int>(ipd) - 1 : static_cast<int>(std::floor(pd));
  const int j2m = (ipd >= 0) ? static_cast<int>(ipd) + 1 : j1M + 1;

  std::vector<RayDensity> rays;
  rays.reserve(ray_count(d, p, branch));
  for (int j1 = 0; j1 <= j1M; ++j1) {
    for (int j2 = j2m; j2 <= d; ++j2) {
      RayDensity r;
      r.d = d;
      r.j1 = j1;
      r.j2 = j2;
      r.mass1 = (static_cast<double>(j2) - pd) / static_cast<double>(j2 - j1);
      r.mass2 = (pd - static_cast<double>(j1)) / static_cast<double>(j2 - j1);
      rays.push_back(r);
    }
  }
  if (ipd >= 0) {
    RayDensity r;
    r.d = d;
    r.j1 = r.j2 = static_cast<int>(ipd);
    r.mass1 = 1.0;
    r.mass2 = 0.0;
    rays.push_back(r);
  }
  return rays;
}

inline SumPmf to_sum_pmf(const RayDensity& ray) {
  std::vector<double> p(static_cast<std::size_t>(ray.d) + 1, 0.0);
  if (ray.is_point_mass()) {
    p[static_cast<std::size_t>(ray.j1)] = 1.0;
  } else {
    p[static_cast<std::size_t>(ray.j1)] = ray.mass1;
    p[static_cast<std::size_t>(ray.j2)] = ray.mass2;
  }
  return SumPmf(std::move(p));
}

// Convex weights over a ray list. Input must already sum to 1 within 1e-9;
// construction renormalizes the residual rounding away.
class MixtureWeights {
 public:
  explicit MixtureWeights(std::vector<double> w) : w_(std::move(w)) {
    if (w_.empty()) throw std::invalid_argument("MixtureWeights: empty");
    double sum = 0.0;
    for (double v : w_) {
      if (!(v >= 0.0)) throw std::invalid_argument("MixtureWeights: negative or NaN entry");
      sum += v;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("MixtureWeights: weights must sum to 1 within 1e-9");
    for (double& v : w_) v /= sum;
  }

  std::size_t size() const { return w_.size(); }
  const std::vector<double>& weights() const { return w_; }
  double operator[](std::size_t i) const { return w_[i]; }

 private:
  std::vector<double> w_;
};

inline SumPmf mixture_pmf(const std::vector<RayDensity>& rays, const MixtureWeights& lambda) {
  if (rays.empty()) throw std::invalid_argument("mixture_pmf: no rays");
  if (rays.size() != lambda.size())
    throw std::invalid_argument("mixture_pmf: weight count does not match ray count");
  const int d = rays.front().d;
  const double pd = rays.front().mean();
  for (const RayDensity& r : rays) {
    if (r.d != d) throw std::invalid_argument("mixture_pmf: rays with mixed dimension");
    if (std::fabs(r.mean() - pd) > 1e-9)
      throw std::invalid_argument("mixture_pmf: rays with mixed mean");
  }
  std::vector<double> p(static_cast<std::size_t>(d) + 1, 0.0);
  for (std::size_t i = 0; i < rays.size(); ++i) {
    const RayDensity& r = rays[i];
    const double w = lambda[i];
    if (r.is_point_mass()) {
      p[static_cast<std::size_t>(r.j1)] += w;
    } else {
      p[static_cast<std::size_t>(r.j1)] += w * r.mass1;
      p[static_cast<std::size_t>(r.j2)] += w * r.mass2;
    }
  }
  return SumPmf(std::move(p));
}

}  // namespace exchpoly
