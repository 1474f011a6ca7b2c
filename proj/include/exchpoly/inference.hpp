#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "exchpoly/common.hpp"
#include "exchpoly/geometry.hpp"
#include "exchpoly/pmf.hpp"
#include "exchpoly/rays.hpp"

namespace exchpoly {

// Observed counts of an n x d binary sample: sparse per-cell counts (packed
// bit keys, available for d <= 62) plus the aggregated sum counts N_0..N_d.
struct CountData {
  int d = 0;
  std::int64_t n = 0;
  std::vector<std::int64_t> sum_counts;                       // size d+1
  std::vector<std::pair<std::uint64_t, std::int64_t>> cells;  // sorted by key
  bool has_cells = false;
};

inline CountData counts_from_matrix(const std::vector<std::vector<std::uint8_t>>& rows) {
  if (rows.empty()) throw std::invalid_argument("counts_from_matrix: empty input");
  const int d = static_cast<int>(rows.front().size());
  if (d < 1) throw std::invalid_argument("counts_from_matrix: rows must have at least one column");

  CountData out;
  out.d = d;
  out.n = static_cast<std::int64_t>(rows.size());
  out.sum_counts.assign(static_cast<std::size_t>(d) + 1, 0);
  out.has_cells = d <= 62;

  std::map<std::uint64_t, std::int64_t> cells;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != d)
      throw std::invalid_argument("counts_from_matrix: ragged rows");
    int w = 0;
    std::uint64_t key = 0;
    for (int c = 0; c < d; ++c) {
      const std::uint8_t v = row[static_cast<std::size_t>(c)];
      if (v != 0 && v != 1) throw std::invalid_argument("counts_from_matrix: non-binary entry");
      w += v;
      if (out.has_cells && v) key |= (1ull << c);
    }
    ++out.sum_counts[static_cast<std::size_t>(w)];
    if (out.has_cells) ++cells[key];
  }
  if (out.has_cells) out.cells.assign(cells.begin(), cells.end());
  return out;
}

// Sum counts only; enough for estimation, not for the GLR test.
inline CountData counts_from_sums(int d, std::vector<std::int64_t> sums) {
  if (d < 1 || sums.size() != static_cast<std::size_t>(d) + 1)
    throw std::invalid_argument("counts_from_sums: need d+1 counts");
  CountData out;
  out.d = d;
  out.sum_counts = std::move(sums);
  out.n = 0;
  for (std::int64_t c : out.sum_counts) {
    if (c < 0) throw std::invalid_argument("counts_from_sums: negative count");
    out.n += c;
  }
  if (out.n == 0) throw std::invalid_argument("counts_from_sums: no observations");
  out.has_cells = false;
  return out;
}

// sum_j N_j log p_j over the sum counts, 0 log 0 := 0 on empty cells.
inline double log_likelihood(const CountData& counts, const SumPmf& pmf) {
  if (pmf.d() != counts.d) throw std::invalid_argument("log_likelihood: dimension mismatch");
  double ll = 0.0;
  for (int j = 0; j <= counts.d; ++j) {
    const std::int64_t nj = counts.sum_counts[static_cast<std::size_t>(j)];
    if (nj == 0) continue;
    const double pj = pmf[j];
    if (pj <= 0.0) return -std::numeric_limits<double>::infinity();
    ll += static_cast<double>(nj) * std::log(pj);
  }
  return ll;
}

inline double log_likelihood(const CountData& counts, const ExchangeablePmf& f) {
  if (f.d() != counts.d) throw std::invalid_argument("log_likelihood: dimension mismatch");
  double ll = 0.0;
  for (int j = 0; j <= counts.d; ++j) {
    const std::int64_t nj = counts.sum_counts[static_cast<std::size_t>(j)];
    if (nj == 0) continue;
    if (f[j] <= 0.0) return -std::numeric_limits<double>::infinity();
    ll += static_cast<double>(nj) * std::log(f[j]);
  }
  return ll;
}

// MLE over all exchangeable pmfs: p_hat_j = N_j/n, f_hat_j = p_hat_j / C(d,j).
inline ExchangeablePmf mle_unconstrained(const CountData& counts) {
  if (counts.n < 1) throw std::invalid_argument("mle_unconstrained: no observations");
  std::vector<double> f(static_cast<std::size_t>(counts.d) + 1);
  for (int j = 0; j <= counts.d; ++j)
    f[static_cast<std::size_t>(j)] =
        static_cast<double>(counts.sum_counts[static_cast<std::size_t>(j)]) /
        static_cast<double>(counts.n) / binom(counts.d, j);
  return ExchangeablePmf(std::move(f));
}

namespace detail {

// Stationary candidate supported exactly on the observed cells: p_j =
// q_j/(a+bj) with (a,b) solving the two constraint equations. Nested
// bisection (a inside, b outside) plus a Newton polish.
inline bool mle_interior_candidate(const std::vector<int>& support, const std::vector<double>& q,
                                   double m, std::vector<double>& p_out) {
  const int lo = support.front();
  const int hi = support.back();
  if (support.size() == 1) {
    if (std::fabs(m - lo) > 1e-12) return false;
    p_out.assign(p_out.size(), 0.0);
    p_out[static_cast<std::size_t>(lo)] = 1.0;
    return true;
  }
  if (!(m > lo && m < hi)) return false;

  if (support.size() == 2) {
    // the two constraints pin both masses
    const double p_hi = (m - lo) / static_cast<double>(hi - lo);
    p_out.assign(p_out.size(), 0.0);
    p_out[static_cast<std::size_t>(lo)] = 1.0 - p_hi;
    p_out[static_cast<std::size_t>(hi)] = p_hi;
    return true;
  }

  auto solve_a = [&](double b) {
    // unique a with sum q_j/(a+bj) = 1, decreasing in a
    double a_lo = 0.0;
    for (int j : support) a_lo = std::max(a_lo, -b * j);
    const double shift = a_lo;
    auto g = [&](double a) {
      double s = 0.0;
      for (std::size_t k = 0; k < support.size(); ++k) s += q[k] / (a + b * support[k]);
      return s;
    };
    double step = 1.0;
    double hi_a = shift + step;
    while (g(hi_a) > 1.0 && step < 1e12) {
      step *= 2.0;
      hi_a = shift + step;
    }
    double lo_a = shift + step * 1e-18;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo_a + hi_a);
      (g(mid) > 1.0 ? lo_a : hi_a) = mid;
    }
    return 0.5 * (lo_a + hi_a);
  };
  auto mean_at = [&](double b) {
    const double a = solve_a(b);
    double s = 0.0;
    for (std::size_t k = 0; k < support.size(); ++k)
      s += support[k] * q[k] / (a + b * support[k]);
    return std::make_pair(s, a);
  };

  // bracket b: mean is decreasing in b, -> hi as b -> -inf, lo as b -> +inf
  double b_lo = -1.0;
  double b_hi = 1.0;
  while (mean_at(b_lo).first < m && b_lo > -1e12) b_lo *= 2.0;
  while (mean_at(b_hi).first > m && b_hi < 1e12) b_hi *= 2.0;
  double a = 0.0;
  double b = 0.0;
  for (int it = 0; it < 200; ++it) {
    b = 0.5 * (b_lo + b_hi);
    const auto [mean, a_mid] = mean_at(b);
    a = a_mid;
    (mean > m ? b_lo : b_hi) = b;
  }

  // Newton polish on F(a,b) = (sum q/w - 1, sum j q/w - m)
  for (int it = 0; it < 60; ++it) {
    double f0 = -1.0, f1 = -m;
    double j00 = 0.0, j01 = 0.0, j11 = 0.0;
    bool ok = true;
    for (std::size_t k = 0; k < support.size(); ++k) {
      const double w = a + b * support[k];
      if (w <= 0.0) {
        ok = false;
        break;
      }
      const double r = q[k] / w;
      const double r2 = r / w;
      f0 += r;
      f1 += support[k] * r;
      j00 -= r2;
      j01 -= support[k] * r2;
      j11 -= support[k] * static_cast<double>(support[k]) * r2;
    }
    if (!ok) break;
    const double det = j00 * j11 - j01 * j01;
    if (std::fabs(det) < 1e-300) break;
    const double da = (j11 * f0 - j01 * f1) / det;
    const double db = (j00 * f1 - j01 * f0) / det;
    double step = 1.0;
    for (int h = 0; h < 60; ++h) {
      bool positive = true;
      for (int j : support)
        if (a - step * da + (b - step * db) * j <= 0.0) {
          positive = false;
          break;
        }
      if (positive) break;
      step *= 0.5;
    }
    a -= step * da;
    b -= step * db;
    if (std::fabs(f0) < 1e-15 && std::fabs(f1) < 1e-13 * std::max(1.0, m)) break;
  }

  p_out.assign(p_out.size(), 0.0);
  for (std::size_t k = 0; k < support.size(); ++k) {
    const double w = a + b * support[k];
    if (w <= 0.0) return false;
    p_out[static_cast<std::size_t>(support[k])] = q[k] / w;
  }
  return true;
}

// Boundary candidate: all observed cells plus the extreme cell jx (0 or d),
// which carries the slack mass required by the mean constraint. Closed form.
inline bool mle_boundary_candidate(const std::vector<int>& support, const std::vector<double>& q,
                                   double m, int jx, int d, std::vector<double>& p_out) {
  p_out.assign(p_out.size(), 0.0);
  double used = 0.0;
  for (std::size_t k = 0; k < support.size(); ++k) {
    const int j = support[k];
    if (j == jx) return false;
    double pj;
    if (jx == 0) {
      pj = q[k] * m / j;
    } else {
      pj = q[k] * (d - m) / (d - j);
    }
    if (!(pj > 0.0)) return false;
    p_out[static_cast<std::size_t>(j)] = pj;
    used += pj;
  }
  const double t = 1.0 - used;
  if (t < -1e-12) return false;
  p_out[static_cast<std::size_t>(jx)] = std::max(t, 0.0);
  return true;
}

}  // namespace detail

struct FixedPMle {
  SumPmf pmf;
  MixtureWeights lambda;
  double loglik = 0.0;
};

// Constrained MLE on {p >= 0, sum p = 1, sum j p_j = pd}: a concave program
// whose optimum is one of three KKT patterns (interior over the observed
// cells, or those cells plus mass at 0 or at d). All feasible candidates are
// built and the best likelihood wins. The mixture weights are read off as
// barycentric coordinates in the simplex of the triangulation containing the
// optimum; the representation is not unique and any valid one is returned.
inline FixedPMle mle_fixed_p(const CountData& counts, double p,
                             PdBranch branch = PdBranch::auto_detect) {
  detail::check_dp(counts.d, p);
  if (counts.n < 1) throw std::invalid_argument("mle_fixed_p: no observations");
  const int d = counts.d;
  const long long ipd = detail::integer_pd(d, p, branch);
  const double m = ipd >= 0 ? static_cast<double>(ipd) : p * static_cast<double>(d);

  std::vector<int> support;
  std::vector<double> q;
  for (int j = 0; j <= d; ++j) {
    if (counts.sum_counts[static_cast<std::size_t>(j)] > 0) {
      support.push_back(j);
      q.push_back(static_cast<double>(counts.sum_counts[static_cast<std::size_t>(j)]) /
                  static_cast<double>(counts.n));
    }
  }

  std::vector<double> best;
  double best_ll = -std::numeric_limits<double>::infinity();
  auto consider = [&](const std::vector<double>& cand) {
    double ll = 0.0;
    for (std::size_t k = 0; k < support.size(); ++k) {
      const double pj = cand[static_cast<std::size_t>(support[k])];
      if (pj <= 0.0) return;
      ll += static_cast<double>(counts.sum_counts[static_cast<std::size_t>(support[k])]) *
            std::log(pj);
    }
    if (ll > best_ll) {
      best_ll = ll;
      best = cand;
    }
  };

  std::vector<double> cand(static_cast<std::size_t>(d) + 1, 0.0);
  if (detail::mle_interior_candidate(support, q, m, cand)) consider(cand);
  if (support.front() > 0 && detail::mle_boundary_candidate(support, q, m, 0, d, cand))
    consider(cand);
  if (support.back() < d && detail::mle_boundary_candidate(support, q, m, d, d, cand))
    consider(cand);
  if (best.empty()) throw std::runtime_error("mle_fixed_p: no feasible stationary point found");

  // exact renormalization against accumulated rounding
  double s = 0.0;
  for (double v : best) s += v;
  for (double& v : best) v /= s;
  SumPmf pmf{best};

  const TriangulatedPolytope tri = triangulate_polytope(d, p, branch);
  Eigen::VectorXd x(d + 1);
  for (int j = 0; j <= d; ++j) x[j] = pmf[j];
  const Eigen::VectorXd coords = tri.poly.project(x);
  const int s_idx = locate(tri, coords, 1e-7);
  if (s_idx < 0) throw std::runtime_error("mle_fixed_p: optimum not located in the polytope");
  std::vector<double> lambda(tri.poly.vertices.size(), 0.0);
  if (tri.poly.affine_dim == 0) {
    lambda[0] = 1.0;
  } else {
    const Eigen::VectorXd bary = barycentric(tri, static_cast<std::size_t>(s_idx), coords);
    for (Eigen::Index k = 0; k < bary.size(); ++k) {
      const double w = std::max(bary[k], 0.0);
      lambda[static_cast<std::size_t>(tri.simplices[static_cast<std::size_t>(s_idx)]
                                          [static_cast<std::size_t>(k)])] += w;
    }
    double tot = 0.0;
    for (double w : lambda) tot += w;
    for (double& w : lambda) w /= tot;
  }
  return FixedPMle{std::move(pmf), MixtureWeights(std::move(lambda)), best_ll};
}

enum class Hypothesis { exchangeable, exchangeable_with_mean };

struct GlrResult {
  double lambda_stat = 1.0;  // Lambda(N) in (0,1]
  double neg2log = 0.0;
  std::uint64_t df = 0;
  double p_value = 1.0;
  double alpha = 0.05;
  bool reject = false;
  double min_expected = 0.0;     // n * min_j f_hat_j over all 2^d cells
  bool low_count_warning = false;
};

// Generalized likelihood ratio test of H0 (exchangeability, optionally with a
// fixed mean) against the saturated multinomial on the 2^d cells. Observed
// cells only enter the products (0^0 := 1); unobserved cells contribute a
// factor of one. -2 log Lambda is referred to chi-square with
// k = 2^d - 1 - dim(H0).
inline GlrResult glr_test(const CountData& counts, Hypothesis h0, double p, double alpha) {
  if (!counts.has_cells)
    throw std::invalid_argument("glr_test: per-cell counts required (d <= 62, built from a matrix)");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("glr_test: alpha must lie in (0,1)");
  const int d = counts.d;

  ExchangeablePmf f_hat = h0 == Hypothesis::exchangeable
                              ? mle_unconstrained(counts)
                              : map_H_inv(mle_fixed_p(counts, p).pmf);

  double term = 0.0;  // sum N_c log(N_c / (n f_hat_c))
  bool impossible = false;
  const double n = static_cast<double>(counts.n);
  for (const auto& [key, cnt] : counts.cells) {
    const int w = std::popcount(key);
    const double fc = f_hat[w];
    if (fc <= 0.0) {
      impossible = true;
      break;
    }
    term += static_cast<double>(cnt) * std::log(static_cast<double>(cnt) / (n * fc));
  }

  GlrResult res;
  res.alpha = alpha;
  res.df = (1ull << d) - 1ull - static_cast<std::uint64_t>(h0 == Hypothesis::exchangeable ? d : d - 1);
  if (impossible) {
    res.neg2log = std::numeric_limits<double>::infinity();
    res.lambda_stat = 0.0;
    res.p_value = 0.0;
  } else {
    res.neg2log = std::max(2.0 * term, 0.0);
    res.lambda_stat = std::exp(-0.5 * res.neg2log);
    res.p_value = chi_square_upper_tail(static_cast<double>(res.df), res.neg2log);
  }
  res.reject = res.p_value < alpha;

  double fmin = std::numeric_limits<double>::infinity();
  for (int j = 0; j <= d; ++j) fmin = std::min(fmin, f_hat[j]);
  res.min_expected = n * fmin;
  res.low_count_warning = res.min_expected < 5.0;
  return res;
}

}  // namespace exchpoly
