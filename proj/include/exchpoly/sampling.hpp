#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "exchpoly/geometry.hpp"
#include "exchpoly/measures.hpp"
#include "exchpoly/parallel.hpp"
#include "exchpoly/rays.hpp"
#include "exchpoly/rng.hpp"

namespace exchpoly {

enum class SampleMode { full, sum_only };

// Batch of correlated binary draws. Row sums are always recorded; full mode
// additionally materializes the n x d 0/1 matrix. Draw i consumes only the
// (seed, i) stream, so full and sum-only runs with one seed share their y's
// and the output is independent of the thread count.
struct SampleBatch {
  int d = 0;
  std::int64_t n = 0;
  SampleMode mode = SampleMode::sum_only;
  std::uint64_t seed = 0;
  std::vector<std::int32_t> sums;
  std::vector<std::uint8_t> rows;  // row-major, empty in sum-only mode

  const std::uint8_t* row(std::int64_t i) const { return rows.data() + i * d; }
};

namespace detail {

inline std::vector<double> cumulative(const std::vector<double>& w) {
  std::vector<double> c(w.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc += w[i];
    c[i] = acc;
  }
  c.back() = 1.0;
  return c;
}

inline std::size_t pick_index(const std::vector<double>& cum, double u) {
  return static_cast<std::size_t>(
      std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
}

}  // namespace detail

// Steps 1-2 of the simulation algorithm: ray by lambda, then one of its two
// support points. O(log n_p) per draw, no structure in d.
inline int sample_mixture_sum(const std::vector<RayDensity>& rays,
                              const std::vector<double>& cum_lambda, StreamRng& g) {
  const RayDensity& r = rays[detail::pick_index(cum_lambda, g.next_double())];
  if (r.is_point_mass()) return r.j1;
  return g.next_double() < r.mass1 ? r.j1 : r.j2;
}

// Step 3: uniform 0/1 vector of weight j among the C(d,j) possibilities, via
// a partial Fisher-Yates over whichever of ones/zeros is smaller. O(min(j,d-j))
// time and memory on top of writing the row.
inline void sample_weight_vector(int d, int j, StreamRng& g, std::uint8_t* row) {
  const bool mark_ones = j <= d - j;
  const int k = mark_ones ? j : d - j;
  std::fill(row, row + d, static_cast<std::uint8_t>(mark_ones ? 0 : 1));
  std::unordered_map<int, int> moved;
  moved.reserve(static_cast<std::size_t>(k) * 2);
  for (int i = 0; i < k; ++i) {
    const int r = i + static_cast<int>(g.below(static_cast<std::uint64_t>(d - i)));
    const auto it_i = moved.find(i);
    const int vi = it_i == moved.end() ? i : it_i->second;
    const auto it_r = moved.find(r);
    const int vr = it_r == moved.end() ? r : it_r->second;
    moved[r] = vi;
    row[vr] = static_cast<std::uint8_t>(mark_ones ? 1 : 0);
  }
}

inline SampleBatch sample_mixture(int d, double p, const std::vector<RayDensity>& rays,
                                  const MixtureWeights& lambda, std::int64_t n,
                                  std::uint64_t seed, SampleMode mode = SampleMode::sum_only) {
  detail::check_dp(d, p);
  if (rays.size() != lambda.size())
    throw std::invalid_argument("sample_mixture: weight count does not match ray count");
  if (n < 0) throw std::invalid_argument("sample_mixture: negative draw count");
  const std::vector<double> cum = detail::cumulative(lambda.weights());

  SampleBatch batch;
  batch.d = d;
  batch.n = n;
  batch.mode = mode;
  batch.seed = seed;
  batch.sums.resize(static_cast<std::size_t>(n));
  if (mode == SampleMode::full) batch.rows.resize(static_cast<std::size_t>(n) * d);

  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    StreamRng g(seed, i);
    const int y = sample_mixture_sum(rays, cum, g);
    batch.sums[i] = y;
    if (mode == SampleMode::full) sample_weight_vector(d, y, g, batch.rows.data() + i * d);
  });
  return batch;
}

inline SampleBatch sample_mixture(int d, double p, const MixtureWeights& lambda, std::int64_t n,
                                  std::uint64_t seed, SampleMode mode = SampleMode::sum_only,
                                  PdBranch branch = PdBranch::auto_detect) {
  return sample_mixture(d, p, enumerate_rays(d, p, branch), lambda, n, seed, mode);
}

// Two-ray family spanning the whole correlation range: all weight goes on the
// mu_2-argmin and mu_2-argmax rays (ties to the smallest (j1,j2)), with the
// argmin weight (rho_M - rho)/(rho_M - rho_m) so the mixture hits rho exactly.
inline MixtureWeights correlation_family(int d, double p, double rho,
                                         PdBranch branch = PdBranch::auto_detect) {
  const auto [rho_min, rho_max] = correlation_bounds(d, p, branch);
  if (!(rho >= rho_min - 1e-12 && rho <= rho_max + 1e-12))
    throw std::domain_error("correlation_family: rho outside the attainable range");
  const std::vector<RayDensity> rays = enumerate_rays(d, p, branch);
  std::size_t lo_idx = 0;
  std::size_t hi_idx = 0;
  double lo_val = std::numeric_limits<double>::infinity();
  double hi_val = -lo_val;
  for (std::size_t i = 0; i < rays.size(); ++i) {
    const double mu2 = cross_moment(to_sum_pmf(rays[i]), 2);
    if (mu2 < lo_val) {
      lo_val = mu2;
      lo_idx = i;
    }
    if (mu2 > hi_val) {
      hi_val = mu2;
      hi_idx = i;
    }
  }
  const double target = mu2_of_rho(p, rho);
  double w = (hi_val - target) / (hi_val - lo_val);
  w = std::clamp(w, 0.0, 1.0);
  std::vector<double> weights(rays.size(), 0.0);
  weights[lo_idx] = w;
  weights[hi_idx] += 1.0 - w;
  return MixtureWeights(std::move(weights));
}

// One-factor construction X_i = (1-U_i) Y_i + U_i Z with U_i ~ B(sqrt(rho)),
// Y_i, Z ~ B(p). Nonnegative equicorrelation only.
inline SampleBatch sample_one_factor(int d, double p, double rho, std::int64_t n,
                                     std::uint64_t seed, SampleMode mode = SampleMode::sum_only) {
  detail::check_dp(d, p);
  if (rho < 0.0) throw std::domain_error("sample_one_factor: the construction requires rho >= 0");
  if (rho > 1.0) throw std::domain_error("sample_one_factor: rho must be <= 1");
  const double srho = std::sqrt(rho);

  SampleBatch batch;
  batch.d = d;
  batch.n = n;
  batch.mode = mode;
  batch.seed = seed;
  batch.sums.resize(static_cast<std::size_t>(n));
  if (mode == SampleMode::full) batch.rows.resize(static_cast<std::size_t>(n) * d);

  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    StreamRng g(seed, i);
    const std::uint8_t z = g.bernoulli(p) ? 1 : 0;
    std::int32_t y = 0;
    for (int c = 0; c < d; ++c) {
      const bool common = g.bernoulli(srho);
      const std::uint8_t idio = g.bernoulli(p) ? 1 : 0;
      const std::uint8_t x = common ? z : idio;
      y += x;
      if (mode == SampleMode::full) batch.rows[i * d + static_cast<std::size_t>(c)] = x;
    }
    batch.sums[i] = y;
  });
  return batch;
}

// Beta-mixture parameters solving p = a/(a+b) and
// mu_2 = a(a+1)/((a+b)(a+b+1)) with mu_2 = rho p q + p^2.
inline std::pair<double, double> beta_mixture_params(double p, double rho) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("beta_mixture_params: p must lie in (0,1)");
  if (!(rho > 0.0)) throw std::domain_error("beta_mixture_params: rho must be positive");
  const double mu2 = mu2_of_rho(p, rho);
  if (!(mu2 < p)) throw std::domain_error("beta_mixture_params: degenerate mixture (rho >= 1)");
  const double a = p * (p - mu2) / (mu2 - p * p);
  const double b = a * (1.0 - p) / p;
  return {a, b};
}

// Coordinates conditionally i.i.d. B(Psi), Psi ~ Beta(a,b).
inline SampleBatch sample_beta_mixture(int d, double a, double b, std::int64_t n,
                                       std::uint64_t seed, SampleMode mode = SampleMode::sum_only) {
  if (d < 1) throw std::domain_error("sample_beta_mixture: d must be >= 1");
  if (!(a > 0.0 && b > 0.0)) throw std::domain_error("sample_beta_mixture: a, b must be positive");

  SampleBatch batch;
  batch.d = d;
  batch.n = n;
  batch.mode = mode;
  batch.seed = seed;
  batch.sums.resize(static_cast<std::size_t>(n));
  if (mode == SampleMode::full) batch.rows.resize(static_cast<std::size_t>(n) * d);

  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    StreamRng g(seed, i);
    const double psi = g.beta(a, b);
    std::int32_t y = 0;
    for (int c = 0; c < d; ++c) {
      const std::uint8_t x = g.bernoulli(psi) ? 1 : 0;
      y += x;
      if (mode == SampleMode::full) batch.rows[i * d + static_cast<std::size_t>(c)] = x;
    }
    batch.sums[i] = y;
  });
  return batch;
}

// Uniform pmfs from the polytope: the whole simplex via flat Dirichlet
// (normalized unit-rate exponentials), or the mean-p slice by picking a
// simplex with probability vol(T_i)/vol(C) and flat barycentric weights.
inline std::vector<SumPmf> sample_uniform_pmfs(const TriangulatedPolytope& tri, std::int64_t n,
                                               std::uint64_t seed) {
  const std::vector<double> cum = detail::cumulative(tri.probs);
  const std::size_t ambient = tri.poly.vertices.front().probs().size();
  std::vector<std::vector<double>> raw(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    StreamRng g(seed, i);
    const std::vector<int>& simp = tri.simplices[detail::pick_index(cum, g.next_double())];
    std::vector<double> w(simp.size());
    double tot = 0.0;
    for (double& v : w) {
      v = g.exponential();
      tot += v;
    }
    std::vector<double> point(ambient, 0.0);
    for (std::size_t k = 0; k < simp.size(); ++k) {
      const SumPmf& vert = tri.poly.vertices[static_cast<std::size_t>(simp[k])];
      const double wk = w[k] / tot;
      for (std::size_t j = 0; j < ambient; ++j) point[j] += wk * vert[static_cast<int>(j)];
    }
    raw[i] = std::move(point);
  });
  std::vector<SumPmf> out;
  out.reserve(raw.size());
  for (auto& v : raw) out.emplace_back(std::move(v));
  return out;
}

inline std::vector<SumPmf> sample_uniform_pmfs(int d, std::optional<double> p, std::int64_t n,
                                               std::uint64_t seed,
                                               PdBranch branch = PdBranch::auto_detect) {
  if (d < 1) throw std::domain_error("sample_uniform_pmfs: d must be >= 1");
  if (n < 0) throw std::invalid_argument("sample_uniform_pmfs: negative draw count");
  if (!p.has_value()) {
    std::vector<std::vector<double>> raw(static_cast<std::size_t>(n));
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
      StreamRng g(seed, i);
      std::vector<double> point(static_cast<std::size_t>(d) + 1);
      double tot = 0.0;
      for (double& v : point) {
        v = g.exponential();
        tot += v;
      }
      for (double& v : point) v /= tot;
      raw[i] = std::move(point);
    });
    std::vector<SumPmf> out;
    out.reserve(raw.size());
    for (auto& v : raw) out.emplace_back(std::move(v));
    return out;
  }
  return sample_uniform_pmfs(triangulate_polytope(d, *p, branch), n, seed);
}

// Empirical distribution of any measure under the uniform law on the
// polytope; the sampling route works for non-affine measures (entropy,
// quantiles) where the frustum formula does not apply.
inline MeasureCdf empirical_measure_distribution(int d, std::optional<double> p,
                                                 const MeasureSpec& spec, std::int64_t n,
                                                 std::uint64_t seed,
                                                 PdBranch branch = PdBranch::auto_detect) {
  const std::vector<SumPmf> pmfs = sample_uniform_pmfs(d, p, n, seed, branch);
  std::vector<double> vals(pmfs.size());
  parallel_for(pmfs.size(), [&](std::size_t i) { vals[i] = evaluate(spec, pmfs[i]); });
  std::sort(vals.begin(), vals.end());
  MeasureCdf out;
  out.measure_name = spec.name() + " (empirical)";
  out.grid = std::move(vals);
  out.values.resize(out.grid.size());
  const double count = static_cast<double>(out.grid.size());
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = static_cast<double>(i + 1) / count;
  return out;
}

}  // namespace exchpoly
