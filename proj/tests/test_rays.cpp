#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "exchpoly/pmf.hpp"
#include "exchpoly/rays.hpp"
#include "exchpoly/rng.hpp"
#include "oracle.hpp"

using namespace exchpoly;

namespace {

std::vector<double> dense(const RayDensity& r) { return to_sum_pmf(r).probs(); }

// set-based table comparison: every column has exactly one match within tol
bool matches_table(const std::vector<RayDensity>& rays,
                   const std::vector<std::vector<double>>& table, double tol) {
  if (rays.size() != table.size()) return false;
  std::vector<bool> used(rays.size(), false);
  for (const auto& col : table) {
    bool hit = false;
    for (std::size_t i = 0; i < rays.size(); ++i) {
      if (used[i]) continue;
      const std::vector<double> r = dense(rays[i]);
      if (r.size() != col.size()) return false;
      double err = 0.0;
      for (std::size_t j = 0; j < col.size(); ++j) err = std::max(err, std::fabs(r[j] - col[j]));
      if (err <= tol) {
        used[i] = true;
        hit = true;
        break;
      }
    }
    if (!hit) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("ray table for d=3, p=0.4") {
  const auto rays = enumerate_rays(3, 0.4);
  REQUIRE(rays.size() == 4);
  const std::vector<std::vector<double>> table = {
      {0.4, 0, 0.6, 0}, {0.6, 0, 0, 0.4}, {0, 0.8, 0.2, 0}, {0, 0.9, 0, 0.1}};
  CHECK(matches_table(rays, table, 5e-4));
  // lexicographic (j1, j2) order
  CHECK(rays[0].j1 == 0);
  CHECK(rays[0].j2 == 2);
  CHECK(rays[3].j1 == 1);
  CHECK(rays[3].j2 == 3);
  // closed-form fractions at double precision
  CHECK(rays[0].mass1 == Catch::Approx(0.4).margin(1e-12));
  CHECK(rays[2].mass1 == Catch::Approx(0.8).margin(1e-12));
}

TEST_CASE("ray table for d=6, p=0.4") {
  const auto rays = enumerate_rays(6, 0.4);
  REQUIRE(rays.size() == 12);
  const std::vector<std::vector<double>> table = {
      {0.2, 0, 0, 0.8, 0, 0, 0},      {0.4, 0, 0, 0, 0.6, 0, 0},
      {0.52, 0, 0, 0, 0, 0.48, 0},    {0.6, 0, 0, 0, 0, 0, 0.4},
      {0, 0.3, 0, 0.7, 0, 0, 0},      {0, 8.0 / 15, 0, 0, 7.0 / 15, 0, 0},
      {0, 0.65, 0, 0, 0, 0.35, 0},    {0, 0.72, 0, 0, 0, 0, 0.28},
      {0, 0, 0.6, 0.4, 0, 0, 0},      {0, 0, 0.8, 0, 0.2, 0, 0},
      {0, 0, 2.6 / 3, 0, 0, 0.4 / 3, 0}, {0, 0, 0.9, 0, 0, 0, 0.1}};
  CHECK(matches_table(rays, table, 5e-4));
  // r_6 of the table is the (1,4) ray with masses 8/15, 7/15
  const auto it = std::find_if(rays.begin(), rays.end(),
                               [](const RayDensity& r) { return r.j1 == 1 && r.j2 == 4; });
  REQUIRE(it != rays.end());
  CHECK(it->mass1 == Catch::Approx(8.0 / 15).margin(1e-12));
  CHECK(it->mass2 == Catch::Approx(7.0 / 15).margin(1e-12));
}

TEST_CASE("ray table for d=5, p=1/2 (integer pd)") {
  const auto rays = enumerate_rays(5, 0.5);
  REQUIRE(rays.size() == 9);
  const std::vector<std::vector<double>> table = {
      {1.0 / 6, 0, 0, 5.0 / 6, 0, 0}, {0.375, 0, 0, 0, 0.625, 0}, {0.5, 0, 0, 0, 0, 0.5},
      {0, 0.25, 0, 0.75, 0, 0},       {0, 0.5, 0, 0, 0.5, 0},     {0, 0.625, 0, 0, 0, 0.375},
      {0, 0, 0.5, 0.5, 0, 0},         {0, 0, 0.75, 0, 0.25, 0},   {0, 0, 5.0 / 6, 0, 0, 1.0 / 6}};
  CHECK(matches_table(rays, table, 5e-4));
}

TEST_CASE("integer pd gives the Frechet pair plus point mass") {
  const auto rays = enumerate_rays(2, 0.5);
  REQUIRE(rays.size() == 2);
  CHECK(dense(rays[0]) == std::vector<double>{0.5, 0.0, 0.5});
  CHECK(rays[1].is_point_mass());
  CHECK(rays[1].j1 == 1);
  CHECK(dense(rays[1]) == std::vector<double>{0.0, 1.0, 0.0});
}

TEST_CASE("degenerate rational input lands on the integer branch") {
  const auto rays = enumerate_rays(3, 1.0 / 3.0);
  REQUIRE(rays.size() == ray_count(3, 1.0 / 3.0));
  CHECK(rays.back().is_point_mass());
  CHECK(rays.back().j1 == 1);
  // and can be forced off it
  const auto forced = enumerate_rays(3, 1.0 / 3.0, PdBranch::non_integer);
  for (const auto& r : forced) CHECK_FALSE(r.is_point_mass());
}

TEST_CASE("ray_count closed forms") {
  CHECK(ray_count(3, 0.4) == 4);
  CHECK(ray_count(6, 0.4) == 12);
  CHECK(ray_count(5, 0.4) == 7);  // pd = 2 integer: d^2 p(1-p) + 1 = 7
  for (int d = 1; d <= 12; ++d) {
    for (int k = 1; k <= 19; ++k) {
      const double p = k / 20.0;
      const auto rays = enumerate_rays(d, p);
      CHECK(rays.size() == ray_count(d, p));
      const double pd = p * d;
      const long long r = std::llround(pd);
      if (std::fabs(pd - r) <= 1e-9 * std::max(1.0, pd) && r >= 1 && r <= d - 1) {
        CHECK(static_cast<double>(ray_count(d, p)) ==
              Catch::Approx(d * d * p * (1 - p) + 1).margin(1e-6));
      } else {
        const double j1M = std::floor(pd);
        CHECK(static_cast<double>(ray_count(d, p)) == (j1M + 1) * (d - j1M));
      }
    }
  }
}

TEST_CASE("every ray has mean exactly pd") {
  for (int d = 1; d <= 12; ++d) {
    for (int k = 1; k <= 19; ++k) {
      const double p = k / 20.0;
      const double pd = enumerate_rays(d, p).front().mean();
      for (const auto& r : enumerate_rays(d, p)) {
        CHECK(std::fabs(r.mean() - pd) < 1e-12);
        if (!r.is_point_mass()) {
          CHECK(r.mass1 + r.mass2 == Catch::Approx(1.0).margin(1e-14));
          CHECK(r.mass1 > 0.0);
          CHECK(r.mass2 > 0.0);
        }
      }
    }
  }
}

TEST_CASE("rays are extremal (not convex combinations of the others)") {
  for (const auto& [d, p] : std::vector<std::pair<int, double>>{{3, 0.4}, {5, 0.5}, {6, 0.4}}) {
    const auto rays = enumerate_rays(d, p);
    for (std::size_t i = 0; i < rays.size(); ++i) {
      Eigen::MatrixXd others(d + 1, static_cast<Eigen::Index>(rays.size() - 1));
      Eigen::Index c = 0;
      for (std::size_t j = 0; j < rays.size(); ++j) {
        if (j == i) continue;
        const auto v = dense(rays[j]);
        for (int r = 0; r <= d; ++r) others(r, c) = v[static_cast<std::size_t>(r)];
        ++c;
      }
      Eigen::VectorXd self(d + 1);
      const auto v = dense(rays[i]);
      for (int r = 0; r <= d; ++r) self[r] = v[static_cast<std::size_t>(r)];
      CHECK(oracle::dist_to_convex_hull(others, self) > 1e-4);
    }
  }
}

TEST_CASE("completeness against brute-force vertex enumeration") {
  for (int d = 1; d <= 5; ++d) {
    for (int k = 1; k <= 19; ++k) {
      const double p = k / 20.0;
      const auto rays = enumerate_rays(d, p);
      const auto vertices = oracle::brute_force_mean_polytope_vertices(d, p * d);
      REQUIRE(vertices.size() == rays.size());
      for (const auto& vert : vertices) {
        bool found = false;
        for (const auto& r : rays) {
          const auto rv = dense(r);
          double err = 0.0;
          for (std::size_t j = 0; j < rv.size(); ++j) err = std::max(err, std::fabs(rv[j] - vert[j]));
          if (err < 1e-10) {
            found = true;
            break;
          }
        }
        CHECK(found);
      }
    }
  }
}

TEST_CASE("map_H and its inverse") {
  const ExchangeablePmf iid({0.125, 0.125, 0.125, 0.125});
  const SumPmf pY = map_H(iid);
  CHECK(pY.probs() == std::vector<double>{0.125, 0.375, 0.375, 0.125});

  const SumPmf ray({0.0, 0.8, 0.2, 0.0});
  const ExchangeablePmf f = map_H_inv(ray);
  CHECK(f[1] == Catch::Approx(0.8 / 3).margin(1e-15));
  CHECK(f[2] == Catch::Approx(0.2 / 3).margin(1e-15));

  const SumPmf point({0.0, 0.0, 0.0, 1.0});
  CHECK(map_H_inv(point).f() == std::vector<double>{0.0, 0.0, 0.0, 1.0});

  // round trip on random pmfs
  for (int i = 0; i < 1000; ++i) {
    StreamRng g(99, static_cast<std::uint64_t>(i));
    const int d = 1 + static_cast<int>(g.below(8));
    std::vector<double> p(static_cast<std::size_t>(d) + 1);
    double tot = 0.0;
    for (double& v : p) {
      v = g.exponential();
      tot += v;
    }
    for (double& v : p) v /= tot;
    const SumPmf pmf(p);
    const SumPmf back = map_H(map_H_inv(pmf));
    for (int j = 0; j <= d; ++j) CHECK(std::fabs(back[j] - pmf[j]) < 1e-14);
  }
}

TEST_CASE("exchangeable simplex vertices") {
  const auto verts2 = exchangeable_simplex_vertices(2);
  REQUIRE(verts2.size() == 3);
  CHECK(verts2[0].f() == std::vector<double>{1.0, 0.0, 0.0});
  CHECK(verts2[1].f() == std::vector<double>{0.0, 0.5, 0.0});
  CHECK(verts2[2].f() == std::vector<double>{0.0, 0.0, 1.0});

  CHECK(exchangeable_simplex_vertices(3)[2].f() ==
        std::vector<double>{0.0, 0.0, 1.0 / 3.0, 0.0});

  const auto verts6 = exchangeable_simplex_vertices(6);
  for (int j = 0; j <= 6; ++j) {
    const SumPmf unit = map_H(verts6[static_cast<std::size_t>(j)]);
    for (int i = 0; i <= 6; ++i) CHECK(unit[i] == Catch::Approx(i == j ? 1.0 : 0.0).margin(1e-15));
  }
}

TEST_CASE("mixture pmf") {
  const auto rays = enumerate_rays(3, 0.4);
  const SumPmf unit = mixture_pmf(rays, MixtureWeights({0.0, 1.0, 0.0, 0.0}));
  CHECK(unit[0] == Catch::Approx(0.6).margin(1e-14));
  CHECK(unit[1] == 0.0);
  CHECK(unit[2] == 0.0);
  CHECK(unit[3] == Catch::Approx(0.4).margin(1e-14));

  const SumPmf avg = mixture_pmf(rays, MixtureWeights({0.25, 0.25, 0.25, 0.25}));
  CHECK(avg[0] == Catch::Approx(0.25).margin(1e-15));
  CHECK(avg[1] == Catch::Approx(0.425).margin(1e-15));
  CHECK(avg[2] == Catch::Approx(0.20).margin(1e-15));
  CHECK(avg[3] == Catch::Approx(0.125).margin(1e-15));

  for (int i = 0; i < 50; ++i) {
    StreamRng g(5, static_cast<std::uint64_t>(i));
    std::vector<double> w(rays.size());
    double tot = 0.0;
    for (double& v : w) {
      v = g.exponential();
      tot += v;
    }
    for (double& v : w) v /= tot;
    CHECK(mixture_pmf(rays, MixtureWeights(w)).mean() == Catch::Approx(1.2).margin(1e-12));
  }
}

TEST_CASE("domain and structural errors") {
  CHECK_THROWS_AS(enumerate_rays(0, 0.4), std::domain_error);
  CHECK_THROWS_AS(enumerate_rays(3, 0.0), std::domain_error);
  CHECK_THROWS_AS(enumerate_rays(3, 1.0), std::domain_error);
  CHECK_THROWS_AS(enumerate_rays(3, 0.4, PdBranch::integer), std::domain_error);
  CHECK_THROWS_AS(ray_count(3, -0.1), std::domain_error);
  CHECK_THROWS_AS(MixtureWeights({0.5, 0.4}), std::invalid_argument);
  CHECK_THROWS_AS(MixtureWeights({1.5, -0.5}), std::invalid_argument);
  CHECK_THROWS_AS(SumPmf({0.5, 0.4}), std::invalid_argument);
  CHECK_THROWS_AS(SumPmf({1.5, -0.5}), std::invalid_argument);

  const auto r3 = enumerate_rays(3, 0.4);
  CHECK_THROWS_AS(mixture_pmf(r3, MixtureWeights({0.5, 0.5})), std::invalid_argument);
  auto mixed = r3;
  auto r4 = enumerate_rays(4, 0.4);
  mixed.push_back(r4.front());
  CHECK_THROWS_AS(mixture_pmf(mixed, MixtureWeights({0.2, 0.2, 0.2, 0.2, 0.2})),
                  std::invalid_argument);
}
