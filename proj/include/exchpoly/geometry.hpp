#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "exchpoly/measures.hpp"
#include "exchpoly/rays.hpp"

namespace exchpoly {

// Vertex set expressed in an orthonormal basis of its affine hull, so that
// volumes and distances can be computed intrinsically. The basis comes from
// deterministic Gram-Schmidt over (v_1 - v_0, v_2 - v_0, ...).
struct EmbeddedPolytope {
  std::vector<SumPmf> vertices;
  int affine_dim = 0;
  Eigen::MatrixXd coords;  // one row per vertex, affine_dim columns
  Eigen::MatrixXd basis;   // affine_dim rows, ambient columns
  Eigen::VectorXd origin;  // v_0 in ambient coordinates

  // Project an ambient point into hull coordinates.
  Eigen::VectorXd project(const Eigen::VectorXd& x) const { return basis * (x - origin); }
};

inline EmbeddedPolytope embed(const std::vector<SumPmf>& vertices) {
  if (vertices.empty()) throw std::invalid_argument("embed: no vertices");
  const int d = vertices.front().d();
  for (const SumPmf& v : vertices)
    if (v.d() != d) throw std::invalid_argument("embed: vertices with mixed dimension");
  const int ambient = d + 1;
  const std::size_t m = vertices.size();

  Eigen::MatrixXd pts(m, ambient);
  for (std::size_t i = 0; i < m; ++i)
    for (int j = 0; j < ambient; ++j) pts(static_cast<Eigen::Index>(i), j) = vertices[i][j];

  double scale = 0.0;
  for (std::size_t i = 1; i < m; ++i)
    scale = std::max(scale, (pts.row(static_cast<Eigen::Index>(i)) - pts.row(0)).norm());
  if (scale == 0.0) {
    if (m == 1) {
      EmbeddedPolytope out;
      out.vertices = vertices;
      out.affine_dim = 0;
      out.coords = Eigen::MatrixXd::Zero(1, 0);
      out.basis = Eigen::MatrixXd::Zero(0, ambient);
      out.origin = pts.row(0).transpose();
      return out;
    }
    throw std::invalid_argument("embed: degenerate input (all vertices identical)");
  }

  const double tol = 1e-10 * scale;
  std::vector<Eigen::VectorXd> basis;
  for (std::size_t i = 1; i < m; ++i) {
    Eigen::VectorXd w = (pts.row(static_cast<Eigen::Index>(i)) - pts.row(0)).transpose();
    for (const Eigen::VectorXd& q : basis) w -= q.dot(w) * q;
    // re-orthogonalize once; classic fix for cancellation
    for (const Eigen::VectorXd& q : basis) w -= q.dot(w) * q;
    const double nrm = w.norm();
    if (nrm > tol) basis.push_back(w / nrm);
  }

  EmbeddedPolytope out;
  out.vertices = vertices;
  out.affine_dim = static_cast<int>(basis.size());
  out.origin = pts.row(0).transpose();
  out.basis = Eigen::MatrixXd(out.affine_dim, ambient);
  for (int k = 0; k < out.affine_dim; ++k) out.basis.row(k) = basis[static_cast<std::size_t>(k)].transpose();
  out.coords = Eigen::MatrixXd(m, out.affine_dim);
  for (std::size_t i = 0; i < m; ++i)
    out.coords.row(static_cast<Eigen::Index>(i)) =
        (out.basis * (pts.row(static_cast<Eigen::Index>(i)).transpose() - out.origin)).transpose();
  return out;
}

// |det(v_1-v_0, ..., v_n-v_0)| / n! for n+1 points in n-space.
inline double simplex_volume(const std::vector<std::vector<double>>& pts) {
  if (pts.empty()) throw std::invalid_argument("simplex_volume: no points");
  const std::size_t n = pts.front().size();
  if (pts.size() != n + 1) throw std::invalid_argument("simplex_volume: need n+1 points in n-space");
  for (const auto& p : pts)
    if (p.size() != n) throw std::invalid_argument("simplex_volume: inconsistent point dimension");
  if (n == 0) return 1.0;  // a point; convention used by the 0-dim triangulation
  Eigen::MatrixXd M(n, n);
  for (std::size_t c = 0; c < n; ++c)
    for (std::size_t r = 0; r < n; ++r)
      M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = pts[c + 1][r] - pts[0][r];
  double fact = 1.0;
  for (std::size_t i = 2; i <= n; ++i) fact *= static_cast<double>(i);
  return std::fabs(M.determinant()) / fact;
}

struct TriangulatedPolytope {
  EmbeddedPolytope poly;
  std::vector<std::vector<int>> simplices;  // vertex-index sets, size affine_dim+1
  std::vector<double> volumes;
  std::vector<double> probs;  // volumes / total
  double total_volume = 0.0;
};

namespace detail {

inline double simplex_volume_rows(const Eigen::MatrixXd& coords, const std::vector<int>& idx) {
  const std::size_t n = idx.size() - 1;
  if (n == 0) return 1.0;
  Eigen::MatrixXd M(n, n);
  for (std::size_t c = 0; c < n; ++c)
    M.col(static_cast<Eigen::Index>(c)) =
        (coords.row(idx[c + 1]) - coords.row(idx[0])).transpose();
  double fact = 1.0;
  for (std::size_t i = 2; i <= n; ++i) fact *= static_cast<double>(i);
  return std::fabs(M.determinant()) / fact;
}

// Unit outward normal and offset of the hyperplane through the facet points,
// oriented away from the opposite vertex.
inline std::pair<Eigen::VectorXd, double> facet_plane(const Eigen::MatrixXd& coords,
                                                      const std::vector<int>& facet,
                                                      int opposite) {
  const int n = static_cast<int>(coords.cols());
  Eigen::VectorXd normal;
  if (n == 1) {
    normal = Eigen::VectorXd::Ones(1);
  } else {
    Eigen::MatrixXd E(n - 1, n);
    for (int r = 0; r + 1 < static_cast<int>(facet.size()); ++r)
      E.row(r) = coords.row(facet[static_cast<std::size_t>(r) + 1]) - coords.row(facet[0]);
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(E);
    const Eigen::MatrixXd kernel = lu.kernel();
    normal = kernel.col(0);
  }
  normal.normalize();
  double offset = normal.dot(coords.row(facet[0]).transpose());
  const double side = normal.dot(coords.row(opposite).transpose()) - offset;
  if (side > 0.0) {
    normal = -normal;
    offset = -offset;
  }
  return {normal, offset};
}

}  // namespace detail

// Placing triangulation: vertices inserted in lexicographic order of their
// hull coordinates; every new point outside the current hull is joined to the
// facets it sees. Simplices below 1e-12 of the total volume are pruned and
// the selection probabilities renormalized.
inline TriangulatedPolytope triangulate(const EmbeddedPolytope& poly,
                                        std::vector<int> insertion_order = {}) {
  TriangulatedPolytope out;
  out.poly = poly;
  const int n = poly.affine_dim;
  const std::size_t m = poly.vertices.size();

  if (n == 0) {
    // degenerate polytope: a single point, handled by point evaluation
    out.simplices = {{0}};
    out.volumes = {1.0};
    out.probs = {1.0};
    out.total_volume = 1.0;
    return out;
  }

  if (insertion_order.empty()) {
    insertion_order.resize(m);
    std::iota(insertion_order.begin(), insertion_order.end(), 0);
    const Eigen::MatrixXd& C = poly.coords;
    std::sort(insertion_order.begin(), insertion_order.end(), [&](int a, int b) {
      for (int k = 0; k < n; ++k) {
        if (C(a, k) < C(b, k)) return true;
        if (C(a, k) > C(b, k)) return false;
      }
      return a < b;
    });
  } else if (insertion_order.size() != m) {
    throw std::invalid_argument("triangulate: insertion order must list every vertex");
  }

  double scale = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    scale = std::max(scale, poly.coords.row(static_cast<Eigen::Index>(i)).norm());
  const double eps = 1e-9 * std::max(scale, 1.0);

  // initial full-dimensional simplex: greedily extend affine rank
  std::vector<int> seed_simplex{insertion_order[0]};
  std::vector<int> pending;
  std::vector<Eigen::VectorXd> gs;
  std::size_t cursor = 1;
  for (; cursor < m && static_cast<int>(seed_simplex.size()) < n + 1; ++cursor) {
    const int idx = insertion_order[cursor];
    Eigen::VectorXd w = (poly.coords.row(idx) - poly.coords.row(seed_simplex[0])).transpose();
    for (const Eigen::VectorXd& q : gs) w -= q.dot(w) * q;
    for (const Eigen::VectorXd& q : gs) w -= q.dot(w) * q;
    if (w.norm() > eps) {
      gs.push_back(w.normalized());
      seed_simplex.push_back(idx);
    } else {
      pending.push_back(idx);
    }
  }
  if (static_cast<int>(seed_simplex.size()) != n + 1)
    throw std::invalid_argument("triangulate: vertex set is not full-dimensional in its hull");

  std::vector<std::vector<int>> simplices{seed_simplex};

  std::vector<int> to_insert = pending;
  for (; cursor < m; ++cursor) to_insert.push_back(insertion_order[cursor]);

  for (const int pt : to_insert) {
    // boundary facets: faces appearing in exactly one simplex
    std::map<std::vector<int>, std::pair<int, int>> boundary;  // facet -> (simplex, opposite)
    for (std::size_t s = 0; s < simplices.size(); ++s) {
      const std::vector<int>& simp = simplices[s];
      for (std::size_t drop = 0; drop < simp.size(); ++drop) {
        std::vector<int> facet;
        facet.reserve(simp.size() - 1);
        for (std::size_t k = 0; k < simp.size(); ++k)
          if (k != drop) facet.push_back(simp[k]);
        std::vector<int> key = facet;
        std::sort(key.begin(), key.end());
        auto it = boundary.find(key);
        if (it == boundary.end())
          boundary.emplace(std::move(key), std::make_pair(static_cast<int>(s), simp[drop]));
        else
          it->second.first = -1;  // interior face
      }
    }

    const Eigen::VectorXd x = poly.coords.row(pt).transpose();
    for (const auto& [key, owner] : boundary) {
      if (owner.first < 0) continue;
      const auto [normal, offset] = detail::facet_plane(poly.coords, key, owner.second);
      if (normal.dot(x) - offset > eps) {
        std::vector<int> simp = key;
        simp.push_back(pt);
        simplices.push_back(std::move(simp));
      }
    }
    // a point seeing no facet lies inside the current hull and adds nothing
  }

  std::vector<double> volumes;
  volumes.reserve(simplices.size());
  double total = 0.0;
  for (const std::vector<int>& simp : simplices) {
    const double v = detail::simplex_volume_rows(poly.coords, simp);
    volumes.push_back(v);
    total += v;
  }
  if (!(total > 0.0)) throw std::invalid_argument("triangulate: zero total volume");

  for (std::size_t s = 0; s < simplices.size(); ++s) {
    if (volumes[s] >= 1e-12 * total) {
      out.simplices.push_back(simplices[s]);
      out.volumes.push_back(volumes[s]);
    }
  }
  out.total_volume = std::accumulate(out.volumes.begin(), out.volumes.end(), 0.0);
  out.probs.resize(out.volumes.size());
  for (std::size_t s = 0; s < out.volumes.size(); ++s) out.probs[s] = out.volumes[s] / out.total_volume;
  return out;
}

// Rays -> embedding -> triangulation of the mean-p sum-pmf polytope.
inline TriangulatedPolytope triangulate_polytope(int d, double p,
                                                 PdBranch branch = PdBranch::auto_detect) {
  const std::vector<RayDensity> rays = enumerate_rays(d, p, branch);
  std::vector<SumPmf> vertices;
  vertices.reserve(rays.size());
  for (const RayDensity& r : rays) vertices.push_back(to_sum_pmf(r));
  return triangulate(embed(vertices));
}

// Barycentric coordinates of a point (hull coordinates) wrt simplex s.
inline Eigen::VectorXd barycentric(const TriangulatedPolytope& tri, std::size_t s,
                                   const Eigen::VectorXd& x) {
  const std::vector<int>& simp = tri.simplices[s];
  const int n = tri.poly.affine_dim;
  Eigen::MatrixXd M(n, n);
  for (int c = 0; c < n; ++c)
    M.col(c) = (tri.poly.coords.row(simp[static_cast<std::size_t>(c) + 1]) -
                tri.poly.coords.row(simp[0]))
                   .transpose();
  const Eigen::VectorXd beta =
      M.partialPivLu().solve(x - tri.poly.coords.row(simp[0]).transpose());
  Eigen::VectorXd lambda(n + 1);
  lambda[0] = 1.0 - beta.sum();
  lambda.tail(n) = beta;
  return lambda;
}

// Index of a simplex containing x (all barycentrics >= -tol), or -1.
inline int locate(const TriangulatedPolytope& tri, const Eigen::VectorXd& x, double tol = 1e-9) {
  if (tri.poly.affine_dim == 0) return 0;
  int best = -1;
  double best_min = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < tri.simplices.size(); ++s) {
    const double lo = barycentric(tri, s, x).minCoeff();
    if (lo >= -tol) return static_cast<int>(s);
    if (lo > best_min) {
      best_min = lo;
      best = static_cast<int>(s);
    }
  }
  return best_min >= -1e-6 ? best : -1;
}

namespace detail {

// Varsi's recurrence on the shifted values t - a_i: the negatives feed the
// rows, the nonnegatives the columns, and A[J][K] is the frustum fraction.
inline double varsi_pass(const std::vector<double>& shifted) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (double z : shifted) (z < 0.0 ? xs : ys).push_back(z);
  if (xs.empty()) return 1.0;
  if (ys.empty()) return 0.0;
  std::vector<double> A(ys.size(), 1.0);  // row j=0
  for (const double x : xs) {
    double prev = 0.0;  // column k=0
    for (std::size_t k = 0; k < ys.size(); ++k) {
      const double cur = (ys[k] * A[k] - x * prev) / (ys[k] - x);
      A[k] = cur;
      prev = cur;
    }
  }
  return A.back();
}

}  // namespace detail

// Exact fraction of the standard (K-1)-simplex where sum lambda_i coeffs_i <= t.
// Shifted values within 1e-12 of zero are pushed to both sides and the two
// results averaged, which removes the boundary ambiguity at t equal to a
// coefficient.
inline double varsi_fraction(const std::vector<double>& coeffs, double t) {
  if (coeffs.empty()) throw std::invalid_argument("varsi_fraction: empty coefficients");
  const double span = [&] {
    double lo = coeffs[0], hi = coeffs[0];
    for (double c : coeffs) {
      lo = std::min(lo, c);
      hi = std::max(hi, c);
    }
    return std::max(hi - lo, 1.0);
  }();
  const double zero_tol = 1e-12 * span;

  std::vector<double> shifted(coeffs.size());
  bool boundary = false;
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    shifted[i] = t - coeffs[i];
    if (std::fabs(shifted[i]) <= zero_tol) boundary = true;
  }
  if (!boundary) {
    const double v = detail::varsi_pass(shifted);
    return std::clamp(v, 0.0, 1.0);
  }
  std::vector<double> up = shifted;
  std::vector<double> down = shifted;
  for (std::size_t i = 0; i < shifted.size(); ++i) {
    if (std::fabs(shifted[i]) <= zero_tol) {
      up[i] = zero_tol;
      down[i] = -zero_tol;
    }
  }
  const double v = 0.5 * (detail::varsi_pass(up) + detail::varsi_pass(down));
  return std::clamp(v, 0.0, 1.0);
}

struct MeasureCdf {
  std::vector<double> grid;
  std::vector<double> values;
  std::string measure_name;
};

// F(t) = sum_i P(T_i) * varsi_fraction(values on T_i's vertices, t), the
// distribution of an affine measure under the uniform law on the polytope.
// vertex_values[v] is the measure evaluated at vertex v.
inline MeasureCdf measure_cdf(const TriangulatedPolytope& tri,
                              const std::vector<double>& vertex_values, std::vector<double> grid,
                              std::string name = {}) {
  if (vertex_values.size() != tri.poly.vertices.size())
    throw std::invalid_argument("measure_cdf: need one value per vertex");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (grid[i] < grid[i - 1]) throw std::invalid_argument("measure_cdf: grid must be sorted");

  std::vector<std::vector<double>> simplex_values(tri.simplices.size());
  for (std::size_t s = 0; s < tri.simplices.size(); ++s) {
    simplex_values[s].reserve(tri.simplices[s].size());
    for (int v : tri.simplices[s])
      simplex_values[s].push_back(vertex_values[static_cast<std::size_t>(v)]);
  }

  MeasureCdf out;
  out.measure_name = std::move(name);
  out.values.resize(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double f = 0.0;
    for (std::size_t s = 0; s < tri.simplices.size(); ++s)
      f += tri.probs[s] * varsi_fraction(simplex_values[s], grid[g]);
    out.values[g] = std::clamp(f, 0.0, 1.0);
  }
  for (std::size_t g = 1; g < out.values.size(); ++g)
    out.values[g] = std::max(out.values[g], out.values[g - 1]);
  out.grid = std::move(grid);
  return out;
}

inline std::vector<double> linspace(double lo, double hi, std::size_t count) {
  if (count < 2) return {lo};
  std::vector<double> g(count);
  for (std::size_t i = 0; i < count; ++i)
    g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  g.back() = hi;
  return g;
}

// Exact distribution of an affine measure over the mean-p polytope. The
// entropic risk rides on the inner expectation E[exp(-gamma Y)], which is
// affine; its own thresholds are mapped through exp(gamma t).
inline MeasureCdf measure_cdf_exact(const TriangulatedPolytope& tri, const MeasureSpec& spec,
                                    std::size_t grid_size = 1001) {
  if (!spec.affine_in_pmf())
    throw std::invalid_argument("measure_cdf_exact: measure is not affine in the pmf; use sampling");
  const bool entropic = spec.kind == MeasureSpec::Kind::entropic_risk;
  const double gamma = spec.param;

  std::vector<double> inner(tri.poly.vertices.size());
  for (std::size_t v = 0; v < inner.size(); ++v) {
    const SumPmf& pmf = tri.poly.vertices[v];
    if (entropic) {
      double e = 0.0;
      for (int i = 0; i <= pmf.d(); ++i) e += pmf[i] * std::exp(-gamma * i);
      inner[v] = e;
    } else {
      inner[v] = evaluate(spec, pmf);
    }
  }
  const auto [ilo, ihi] = std::minmax_element(inner.begin(), inner.end());
  double lo = *ilo;
  double hi = *ihi;
  if (entropic) {
    lo = std::log(lo) / gamma;
    hi = std::log(hi) / gamma;
  }
  std::vector<double> grid = linspace(lo, hi, grid_size);
  std::vector<double> thresholds = grid;
  if (entropic)
    for (double& t : thresholds) t = std::exp(gamma * t);
  MeasureCdf cdf = measure_cdf(tri, inner, std::move(thresholds), spec.name());
  cdf.grid = std::move(grid);
  return cdf;
}

// Finite-difference density f(t) = (F(t+delta) - F(t)) / delta, with F read
// off the tabulated cdf by linear interpolation.
inline std::vector<double> cdf_to_pdf(const MeasureCdf& cdf, double delta) {
  if (!(delta > 0.0)) throw std::domain_error("cdf_to_pdf: delta must be positive");
  if (cdf.grid.size() < 2) throw std::invalid_argument("cdf_to_pdf: need at least two grid points");
  auto interp = [&](double t) {
    if (t <= cdf.grid.front()) return cdf.values.front();
    if (t >= cdf.grid.back()) return cdf.values.back();
    const auto it = std::upper_bound(cdf.grid.begin(), cdf.grid.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - cdf.grid.begin());
    const std::size_t lo = hi - 1;
    const double w = (t - cdf.grid[lo]) / (cdf.grid[hi] - cdf.grid[lo]);
    return cdf.values[lo] + w * (cdf.values[hi] - cdf.values[lo]);
  };
  std::vector<double> pdf(cdf.grid.size());
  for (std::size_t i = 0; i < cdf.grid.size(); ++i)
    pdf[i] = (interp(cdf.grid[i] + delta) - cdf.values[i]) / delta;
  return pdf;
}

}  // namespace exchpoly
