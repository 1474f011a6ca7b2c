#include <catch_amalgamated.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <map>
#include <numeric>
#include <vector>

#include "exchpoly/common.hpp"
#include "exchpoly/measures.hpp"
#include "exchpoly/rays.hpp"
#include "exchpoly/sampling.hpp"
#include "oracle.hpp"

using namespace exchpoly;

namespace {

double mu2_hat(const SampleBatch& batch) {
  double acc = 0.0;
  for (std::int32_t y : batch.sums)
    acc += static_cast<double>(y) * (y - 1.0);
  return acc / (static_cast<double>(batch.n) * batch.d * (batch.d - 1.0));
}

double mu2_hat_se(const SampleBatch& batch) {
  const double scale = batch.d * (batch.d - 1.0);
  double mean = 0.0, sq = 0.0;
  for (std::int32_t y : batch.sums) {
    const double v = static_cast<double>(y) * (y - 1.0) / scale;
    mean += v;
    sq += v * v;
  }
  const double n = static_cast<double>(batch.n);
  mean /= n;
  return std::sqrt(std::max(sq / n - mean * mean, 0.0) / n);
}

}  // namespace

TEST_CASE("unit-lambda mixture draws only the ray's support") {
  const auto rays = enumerate_rays(3, 0.4);
  // ray (0,3): masses 0.6 / 0.4
  std::vector<double> w(rays.size(), 0.0);
  w[1] = 1.0;
  const SampleBatch batch = sample_mixture(3, 0.4, rays, MixtureWeights(w), 100000, 42,
                                           SampleMode::full);
  std::int64_t zeros = 0;
  for (std::int64_t i = 0; i < batch.n; ++i) {
    const int y = batch.sums[static_cast<std::size_t>(i)];
    REQUIRE((y == 0 || y == 3));
    const std::uint8_t* row = batch.row(i);
    const int s = row[0] + row[1] + row[2];
    REQUIRE(s == y);
    if (y == 0) ++zeros;
  }
  const double f = static_cast<double>(zeros) / static_cast<double>(batch.n);
  const double se = std::sqrt(0.6 * 0.4 / static_cast<double>(batch.n));
  CHECK(std::fabs(f - 0.6) < 3.0 * se);
}

TEST_CASE("uniform mixture over the d=3 rays has mean pd") {
  const auto rays = enumerate_rays(3, 0.4);
  const MixtureWeights lambda(std::vector<double>(4, 0.25));
  const SampleBatch batch = sample_mixture(3, 0.4, rays, lambda, 1000000, 7);
  double mean = 0.0;
  for (std::int32_t y : batch.sums) mean += y;
  mean /= static_cast<double>(batch.n);
  CHECK(std::fabs(mean - 1.2) < 0.003);
}

TEST_CASE("empirical cell frequencies match the mixture pmf (chi-square)") {
  const auto rays = enumerate_rays(6, 0.4);
  std::vector<double> w(rays.size());
  StreamRng g(100, 0);
  double tot = 0.0;
  for (double& v : w) {
    v = g.exponential();
    tot += v;
  }
  for (double& v : w) v /= tot;
  const MixtureWeights lambda(w);
  const SumPmf expect = mixture_pmf(rays, lambda);
  const SampleBatch batch = sample_mixture(6, 0.4, rays, lambda, 1000000, 9001);

  std::vector<std::int64_t> obs(7, 0);
  for (std::int32_t y : batch.sums) ++obs[static_cast<std::size_t>(y)];
  double stat = 0.0;
  int cells = 0;
  for (int k = 0; k <= 6; ++k) {
    const double e = expect[k] * static_cast<double>(batch.n);
    if (e < 1e-9) {
      CHECK(obs[static_cast<std::size_t>(k)] == 0);
      continue;
    }
    ++cells;
    const double diff = obs[static_cast<std::size_t>(k)] - e;
    stat += diff * diff / e;
  }
  const double p_value = chi_square_upper_tail(cells - 1.0, stat);
  CHECK(p_value > 0.01);
}

TEST_CASE("full-mode rows are uniform over the weight class") {
  // d=5, j*=2: all C(5,2)=10 patterns equally likely
  std::map<std::vector<int>, std::int64_t> freq;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    StreamRng g(2233, static_cast<std::uint64_t>(i));
    std::uint8_t row[5];
    sample_weight_vector(5, 2, g, row);
    std::vector<int> key(row, row + 5);
    ++freq[key];
  }
  REQUIRE(freq.size() == 10);
  double stat = 0.0;
  const double e = n / 10.0;
  for (const auto& [key, count] : freq) {
    CHECK(std::accumulate(key.begin(), key.end(), 0) == 2);
    const double diff = count - e;
    stat += diff * diff / e;
  }
  CHECK(chi_square_upper_tail(9.0, stat) > 0.01);

  // complements route (j* > d/2) is uniform too
  std::map<std::vector<int>, std::int64_t> freq3;
  for (int i = 0; i < n; ++i) {
    StreamRng g(8899, static_cast<std::uint64_t>(i));
    std::uint8_t row[5];
    sample_weight_vector(5, 3, g, row);
    std::vector<int> key(row, row + 5);
    ++freq3[key];
  }
  REQUIRE(freq3.size() == 10);
  stat = 0.0;
  for (const auto& [key, count] : freq3) {
    CHECK(std::accumulate(key.begin(), key.end(), 0) == 3);
    const double diff = count - e;
    stat += diff * diff / e;
  }
  CHECK(chi_square_upper_tail(9.0, stat) > 0.01);
}

TEST_CASE("identical seeds reproduce bit-identical batches across thread counts") {
  const auto rays = enumerate_rays(6, 0.4);
  const MixtureWeights lambda(std::vector<double>(rays.size(), 1.0 / rays.size()));

  setenv("EXCHPOLY_THREADS", "1", 1);
  const SampleBatch serial = sample_mixture(6, 0.4, rays, lambda, 50000, 12345, SampleMode::full);
  setenv("EXCHPOLY_THREADS", "7", 1);
  const SampleBatch threaded = sample_mixture(6, 0.4, rays, lambda, 50000, 12345, SampleMode::full);
  setenv("EXCHPOLY_THREADS", "0", 1);
  const SampleBatch redo = sample_mixture(6, 0.4, rays, lambda, 50000, 12345, SampleMode::full);
  unsetenv("EXCHPOLY_THREADS");

  CHECK(serial.sums == threaded.sums);
  CHECK(serial.rows == threaded.rows);
  CHECK(serial.sums == redo.sums);
  CHECK(serial.rows == redo.rows);
}

TEST_CASE("full-mode row sums equal the sum-only values for the same seed") {
  const auto rays = enumerate_rays(12, 0.35);
  const MixtureWeights lambda(std::vector<double>(rays.size(), 1.0 / rays.size()));
  const SampleBatch full = sample_mixture(12, 0.35, rays, lambda, 5000, 99, SampleMode::full);
  const SampleBatch sums = sample_mixture(12, 0.35, rays, lambda, 5000, 99, SampleMode::sum_only);
  REQUIRE(full.sums == sums.sums);
  for (std::int64_t i = 0; i < full.n; ++i) {
    int s = 0;
    for (int c = 0; c < 12; ++c) s += full.row(i)[c];
    CHECK(s == sums.sums[static_cast<std::size_t>(i)]);
  }
}

TEST_CASE("huge-d sum-only sampling is cheap") {
  const int d = 100000;
  const auto rays = enumerate_rays(d, 0.4);
  const MixtureWeights lambda = correlation_family(d, 0.4, 0.5);
  const auto t0 = std::chrono::steady_clock::now();
  const SampleBatch batch = sample_mixture(d, 0.4, rays, lambda, 100, 5);
  const auto t1 = std::chrono::steady_clock::now();
  CHECK(batch.sums.size() == 100);
  CHECK(std::chrono::duration<double>(t1 - t0).count() < 5.0);
  for (std::int32_t y : batch.sums) {
    CHECK(y >= 0);
    CHECK(y <= d);
  }
}

TEST_CASE("correlation family endpoints and exactness") {
  const auto rays = enumerate_rays(3, 0.4);
  const MixtureWeights at_min = correlation_family(3, 0.4, -7.0 / 18.0);
  // unit mass on the (1,2) ray = (0, 0.8, 0.2, 0)
  CHECK(mixture_pmf(rays, at_min).probs()[1] == Catch::Approx(0.8).margin(1e-9));

  const MixtureWeights at_max = correlation_family(3, 0.4, 1.0);
  CHECK(mixture_pmf(rays, at_max).probs()[3] == Catch::Approx(0.4).margin(1e-9));

  const MixtureWeights at_zero = correlation_family(3, 0.4, 0.0);
  CHECK(cross_moment(mixture_pmf(rays, at_zero), 2) == Catch::Approx(0.16).margin(1e-12));
  CHECK(correlation_of(mixture_pmf(rays, at_zero)) == Catch::Approx(0.0).margin(1e-12));

  CHECK_THROWS_AS(correlation_family(3, 0.4, -0.5), std::domain_error);
  CHECK_THROWS_AS(correlation_family(3, 0.4, 1.1), std::domain_error);
}

TEST_CASE("sampled mu2 tracks the correlation target") {
  for (const auto& [d, p] : std::vector<std::pair<int, double>>{{3, 0.4}, {6, 0.4}}) {
    const auto [rho_min, rho_max] = correlation_bounds(d, p);
    for (const double rho :
         {rho_min, rho_min / 2.0, 0.0, 0.5, 1.0}) {
      const MixtureWeights lambda = correlation_family(d, p, rho);
      const SampleBatch batch = sample_mixture(d, p, lambda, 100000, 321 + d);
      const double target = mu2_of_rho(p, rho);
      CHECK(std::fabs(mu2_hat(batch) - target) <= 3.0 * std::max(mu2_hat_se(batch), 1e-6));
    }
  }
}

TEST_CASE("one-factor sampler") {
  // rho = 1: all coordinates equal
  const SampleBatch all_equal = sample_one_factor(8, 0.3, 1.0, 2000, 1, SampleMode::full);
  for (std::int64_t i = 0; i < all_equal.n; ++i) {
    const int y = all_equal.sums[static_cast<std::size_t>(i)];
    CHECK((y == 0 || y == 8));
  }

  // rho = 0: i.i.d., empirical pairwise correlation near zero
  const SampleBatch indep = sample_one_factor(10, 0.4, 0.0, 100000, 2);
  const double p_hat = [&] {
    double m = 0.0;
    for (std::int32_t y : indep.sums) m += y;
    return m / (static_cast<double>(indep.n) * 10.0);
  }();
  const double rho_hat =
      (mu2_hat(indep) - p_hat * p_hat) / (p_hat * (1.0 - p_hat));
  CHECK(std::fabs(rho_hat) < 0.01);

  // rho = 0.25, p = 0.4: mu2 = 0.22
  const SampleBatch mid = sample_one_factor(6, 0.4, 0.25, 100000, 3);
  CHECK(std::fabs(mu2_hat(mid) - 0.22) < 0.005);

  CHECK_THROWS_AS(sample_one_factor(5, 0.4, -0.1, 10, 0), std::domain_error);
  CHECK_THROWS_AS(sample_one_factor(5, 0.4, 1.5, 10, 0), std::domain_error);
}

TEST_CASE("beta mixture parameters") {
  const auto [a, b] = beta_mixture_params(0.4, 0.25);
  CHECK(a == Catch::Approx(1.2).margin(1e-12));
  CHECK(b == Catch::Approx(1.8).margin(1e-12));
  // substitution into both moment equations
  CHECK(a / (a + b) == Catch::Approx(0.4).margin(1e-12));
  CHECK(a * (a + 1.0) / ((a + b) * (a + b + 1.0)) == Catch::Approx(0.22).margin(1e-12));

  // a=b=1 (uniform mixing) corresponds to p=0.5, mu2=1/3, rho=1/3
  const auto [a2, b2] = beta_mixture_params(0.5, 1.0 / 3.0);
  CHECK(a2 == Catch::Approx(1.0).margin(1e-10));
  CHECK(b2 == Catch::Approx(1.0).margin(1e-10));

  CHECK_THROWS_AS(beta_mixture_params(0.4, 0.0), std::domain_error);
  CHECK_THROWS_AS(beta_mixture_params(0.4, -0.2), std::domain_error);
  CHECK_THROWS_AS(beta_mixture_params(0.4, 1.0), std::domain_error);
}

TEST_CASE("beta mixture sampler hits its moments") {
  const SampleBatch batch = sample_beta_mixture(6, 1.2, 1.8, 100000, 44);
  double mean = 0.0;
  for (std::int32_t y : batch.sums) mean += y;
  mean /= static_cast<double>(batch.n) * 6.0;
  CHECK(std::fabs(mean - 0.4) < 0.005);
  CHECK(std::fabs(mu2_hat(batch) - 0.22) < 0.005);
}

TEST_CASE("uniform pmfs on the constrained polytope") {
  const auto tri = triangulate_polytope(3, 0.4);
  const auto pmfs = sample_uniform_pmfs(tri, 100000, 555);

  // every sample keeps the mean constraint
  for (std::size_t i = 0; i < pmfs.size(); i += 997)
    CHECK(pmfs[i].mean() == Catch::Approx(1.2).margin(1e-12));

  // empirical mean pmf approaches the volume-weighted centroid
  std::vector<double> centroid(4, 0.0);
  for (std::size_t s = 0; s < tri.simplices.size(); ++s) {
    for (int v : tri.simplices[s]) {
      const SumPmf& vert = tri.poly.vertices[static_cast<std::size_t>(v)];
      for (int j = 0; j <= 3; ++j)
        centroid[static_cast<std::size_t>(j)] +=
            tri.probs[s] * vert[j] / static_cast<double>(tri.simplices[s].size());
    }
  }
  std::vector<double> mean(4, 0.0);
  for (const SumPmf& pmf : pmfs)
    for (int j = 0; j <= 3; ++j) mean[static_cast<std::size_t>(j)] += pmf[j];
  for (double& v : mean) v /= static_cast<double>(pmfs.size());
  for (int j = 0; j <= 3; ++j)
    CHECK(std::fabs(mean[static_cast<std::size_t>(j)] - centroid[static_cast<std::size_t>(j)]) <
          0.005);

  // and the exact mu2 law matches the sampled one
  std::vector<double> vals;
  vals.reserve(pmfs.size());
  for (const SumPmf& pmf : pmfs) vals.push_back(cross_moment(pmf, 2));
  std::sort(vals.begin(), vals.end());
  std::vector<double> inner(tri.poly.vertices.size());
  for (std::size_t v = 0; v < inner.size(); ++v) inner[v] = cross_moment(tri.poly.vertices[v], 2);
  std::vector<std::vector<double>> sv(tri.simplices.size());
  for (std::size_t s = 0; s < tri.simplices.size(); ++s)
    for (int v : tri.simplices[s]) sv[s].push_back(inner[static_cast<std::size_t>(v)]);
  auto exact = [&](double t) {
    double f = 0.0;
    for (std::size_t s = 0; s < tri.simplices.size(); ++s)
      f += tri.probs[s] * varsi_fraction(sv[s], t);
    return f;
  };
  CHECK(oracle::ks_distance(vals, exact) < 0.01);
}

TEST_CASE("unconstrained simplex sampling covers the correlation wedge") {
  const auto pmfs = sample_uniform_pmfs(3, std::nullopt, 100000, 777);
  double min_rho = 1.0;
  double arg_p = 0.0;
  for (const SumPmf& pmf : pmfs) {
    const double p = pmf.mean() / 3.0;
    if (p <= 1e-9 || p >= 1.0 - 1e-9) continue;
    const double rho = correlation_of(pmf);
    CHECK(rho >= -0.5 - 1e-9);
    CHECK(rho <= 1.0 + 1e-9);
    if (rho < min_rho) {
      min_rho = rho;
      arg_p = p;
    }
  }
  CHECK(min_rho < -0.4);  // the wedge tip near p = 1/3 or 2/3 is reached
  CHECK((std::fabs(arg_p - 1.0 / 3.0) < 0.15 || std::fabs(arg_p - 2.0 / 3.0) < 0.15));
}

TEST_CASE("empirical measure distribution") {
  const MeasureCdf ent = empirical_measure_distribution(3, 0.4, MeasureSpec::shannon(), 100000, 2020);
  CHECK(ent.grid.front() > 0.0);
  CHECK(ent.grid.back() <= std::log(4.0) + 1e-12);
  CHECK(ent.values.back() == Catch::Approx(1.0).margin(1e-12));
  for (std::size_t i = 1; i < ent.values.size(); ++i) CHECK(ent.values[i] >= ent.values[i - 1]);

  // mu2: empirical vs exact cdf
  const auto tri = triangulate_polytope(3, 0.4);
  const MeasureCdf emp = empirical_measure_distribution(3, 0.4, MeasureSpec::cross(2), 100000, 31337);
  const MeasureCdf exact = measure_cdf_exact(tri, MeasureSpec::cross(2), 4001);
  auto exact_at = [&](double t) {
    if (t <= exact.grid.front()) return 0.0;
    if (t >= exact.grid.back()) return 1.0;
    const auto it = std::upper_bound(exact.grid.begin(), exact.grid.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - exact.grid.begin());
    const double w = (t - exact.grid[hi - 1]) / (exact.grid[hi] - exact.grid[hi - 1]);
    return exact.values[hi - 1] + w * (exact.values[hi] - exact.values[hi - 1]);
  };
  CHECK(oracle::ks_distance(emp.grid, exact_at) < 0.01);
}
