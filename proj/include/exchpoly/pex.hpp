#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "exchpoly/common.hpp"
#include "exchpoly/pmf.hpp"

namespace exchpoly::pex {

// Ordered partition G_1,...,G_n of the coordinate set {1,...,d}.
struct PartitionSpec {
  int d = 0;
  std::vector<std::vector<int>> groups;  // 1-based coordinate ids

  PartitionSpec(int dim, std::vector<std::vector<int>> parts)
      : d(dim), groups(std::move(parts)) {
    if (d < 1) throw std::invalid_argument("PartitionSpec: d must be >= 1");
    std::vector<bool> seen(static_cast<std::size_t>(d) + 1, false);
    int covered = 0;
    for (const auto& g : groups) {
      if (g.empty()) throw std::invalid_argument("PartitionSpec: empty group");
      for (int i : g) {
        if (i < 1 || i > d) throw std::invalid_argument("PartitionSpec: coordinate out of range");
        if (seen[static_cast<std::size_t>(i)])
          throw std::invalid_argument("PartitionSpec: coordinate repeated across groups");
        seen[static_cast<std::size_t>(i)] = true;
        ++covered;
      }
    }
    if (covered != d) throw std::invalid_argument("PartitionSpec: groups must cover {1,...,d}");
  }

  int group_count() const { return static_cast<int>(groups.size()); }

  std::vector<int> sizes() const {
    std::vector<int> s;
    s.reserve(groups.size());
    for (const auto& g : groups) s.push_back(static_cast<int>(g.size()));
    return s;
  }

  // (d_1+1) x ... x (d_n+1) cells
  std::size_t cell_count() const {
    std::size_t c = 1;
    for (const auto& g : groups) c *= g.size() + 1;
    return c;
  }

  // dimension of the simplex of partially exchangeable pmfs
  std::size_t simplex_dim() const { return cell_count() - 1; }
};

// Joint pmf of the per-group sum vector (Y_1,...,Y_n) on the grid
// {0..d_1} x ... x {0..d_n}, stored flat with the first axis fastest.
class MultiSumPmf {
 public:
  MultiSumPmf(std::vector<int> shape, std::vector<double> p)
      : shape_(std::move(shape)), p_(std::move(p)) {
    std::size_t cells = 1;
    for (int s : shape_) {
      if (s < 2) throw std::invalid_argument("MultiSumPmf: each axis needs at least 2 levels");
      cells *= static_cast<std::size_t>(s);
    }
    if (p_.size() != cells) throw std::invalid_argument("MultiSumPmf: shape does not match data");
    double sum = 0.0;
    for (double v : p_) {
      if (!(v >= 0.0)) throw std::invalid_argument("MultiSumPmf: negative or NaN entry");
      sum += v;
    }
    if (std::fabs(sum - 1.0) > 1e-12) throw std::invalid_argument("MultiSumPmf: must sum to 1");
  }

  const std::vector<int>& shape() const { return shape_; }
  const std::vector<double>& data() const { return p_; }
  std::size_t cells() const { return p_.size(); }

  std::size_t flat_index(const std::vector<int>& multi) const {
    std::size_t idx = 0;
    std::size_t stride = 1;
    for (std::size_t ax = 0; ax < shape_.size(); ++ax) {
      if (multi[ax] < 0 || multi[ax] >= shape_[ax])
        throw std::out_of_range("MultiSumPmf: index out of range");
      idx += static_cast<std::size_t>(multi[ax]) * stride;
      stride *= static_cast<std::size_t>(shape_[ax]);
    }
    return idx;
  }

  std::vector<int> multi_index(std::size_t flat) const {
    std::vector<int> multi(shape_.size());
    for (std::size_t ax = 0; ax < shape_.size(); ++ax) {
      multi[ax] = static_cast<int>(flat % static_cast<std::size_t>(shape_[ax]));
      flat /= static_cast<std::size_t>(shape_[ax]);
    }
    return multi;
  }

  // marginal pmf of axis ax, as a plain vector
  std::vector<double> margin(std::size_t ax) const {
    std::vector<double> m(static_cast<std::size_t>(shape_[ax]), 0.0);
    for (std::size_t c = 0; c < p_.size(); ++c) m[static_cast<std::size_t>(multi_index(c)[ax])] += p_[c];
    return m;
  }

 private:
  std::vector<int> shape_;
  std::vector<double> p_;
};

namespace detail {
inline std::vector<int> grid_shape(const PartitionSpec& spec) {
  std::vector<int> shape;
  shape.reserve(spec.groups.size());
  for (const auto& g : spec.groups) shape.push_back(static_cast<int>(g.size()) + 1);
  return shape;
}
}  // namespace detail

// p_D(j_1..j_n) = prod_k C(d_k, j_k) * g(j_1..j_n): the bijection between a
// partially exchangeable pmf (given through its g-array of common cell
// values) and the pmf of the group sums. Reduces to map_H when n = 1.
inline MultiSumPmf map_FG(const std::vector<double>& g, const PartitionSpec& spec) {
  const std::vector<int> shape = detail::grid_shape(spec);
  std::size_t cells = 1;
  for (int s : shape) cells *= static_cast<std::size_t>(s);
  if (g.size() != cells) throw std::invalid_argument("map_FG: g-array does not match grid shape");
  const std::vector<int> sizes = spec.sizes();

  std::vector<double> p(cells);
  MultiSumPmf probe(shape, std::vector<double>(cells, 1.0 / static_cast<double>(cells)));
  for (std::size_t c = 0; c < cells; ++c) {
    const std::vector<int> multi = probe.multi_index(c);
    double coeff = 1.0;
    for (std::size_t k = 0; k < sizes.size(); ++k) coeff *= binom(sizes[k], multi[k]);
    p[c] = coeff * g[c];
  }
  return MultiSumPmf(shape, std::move(p));
}

inline std::vector<double> map_FG_inv(const MultiSumPmf& pD, const PartitionSpec& spec) {
  const std::vector<int> sizes = spec.sizes();
  if (pD.shape() != detail::grid_shape(spec))
    throw std::invalid_argument("map_FG_inv: grid shape does not match partition");
  std::vector<double> g(pD.cells());
  for (std::size_t c = 0; c < pD.cells(); ++c) {
    const std::vector<int> multi = pD.multi_index(c);
    double coeff = 1.0;
    for (std::size_t k = 0; k < sizes.size(); ++k) coeff *= binom(sizes[k], multi[k]);
    g[c] = pD.data()[c] / coeff;
  }
  return g;
}

// Linear system cutting the mean-vector slice: one equation per group, the
// cell (j_1..j_n) entering equation k with coefficient (j_k - p_k d_k).
inline Eigen::MatrixXd pex_constraints(const PartitionSpec& spec, const std::vector<double>& means) {
  const int n = spec.group_count();
  if (static_cast<int>(means.size()) != n)
    throw std::invalid_argument("pex_constraints: one mean per group required");
  for (double p : means)
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("pex_constraints: means must lie in (0,1)");
  const std::vector<int> sizes = spec.sizes();
  const std::size_t cells = spec.cell_count();

  MultiSumPmf probe(detail::grid_shape(spec),
                    std::vector<double>(cells, 1.0 / static_cast<double>(cells)));
  Eigen::MatrixXd A(n, static_cast<Eigen::Index>(cells));
  for (std::size_t c = 0; c < cells; ++c) {
    const std::vector<int> multi = probe.multi_index(c);
    for (int k = 0; k < n; ++k)
      A(k, static_cast<Eigen::Index>(c)) =
          static_cast<double>(multi[static_cast<std::size_t>(k)]) -
          means[static_cast<std::size_t>(k)] * sizes[static_cast<std::size_t>(k)];
  }
  return A;
}

// All extremal points of {p >= 0, sum p = 1, group means fixed}: candidate
// supports of size <= n+1 are enumerated, the square-or-tall linear system is
// solved on each, and strictly positive consistent solutions are kept. Valid
// because every vertex has at most n+1 nonzero cells.
inline std::vector<MultiSumPmf> pex_rays(const PartitionSpec& spec, const std::vector<double>& means,
                                         std::size_t combination_guard = 10'000'000) {
  const Eigen::MatrixXd C = pex_constraints(spec, means);
  const int n = spec.group_count();
  const std::size_t cells = spec.cell_count();
  const std::vector<int> shape = detail::grid_shape(spec);

  // rows: normalization then the n mean constraints
  Eigen::MatrixXd A(n + 1, static_cast<Eigen::Index>(cells));
  A.row(0).setOnes();
  A.bottomRows(n) = C;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
  rhs[0] = 1.0;

  double combos = 0.0;
  for (int s = 1; s <= n + 1; ++s) {
    double c = 1.0;
    for (int i = 0; i < s; ++i) c *= static_cast<double>(cells - static_cast<std::size_t>(i)) / (i + 1.0);
    combos += c;
  }
  if (combos > static_cast<double>(combination_guard))
    throw std::runtime_error("pex_rays: support enumeration too large; raise the guard knowingly");

  std::map<std::vector<long long>, std::vector<double>> found;  // dedupe key -> dense pmf
  std::vector<int> comb;
  auto try_support = [&](const std::vector<int>& supp) {
    const int s = static_cast<int>(supp.size());
    Eigen::MatrixXd As(n + 1, s);
    for (int c = 0; c < s; ++c) As.col(c) = A.col(supp[static_cast<std::size_t>(c)]);
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(As);
    if (qr.rank() < s) return;  // dependent columns cannot give a basic solution
    const Eigen::VectorXd x = qr.solve(rhs);
    if ((As * x - rhs).norm() > 1e-9) return;  // inconsistent support
    for (int c = 0; c < s; ++c)
      if (x[c] <= 1e-10) return;  // smaller supports are enumerated separately
    std::vector<long long> key;
    key.reserve(static_cast<std::size_t>(s) * 2);
    std::vector<double> dense(cells, 0.0);
    for (int c = 0; c < s; ++c) {
      key.push_back(supp[static_cast<std::size_t>(c)]);
      key.push_back(std::llround(x[c] * 1e10));
      dense[static_cast<std::size_t>(supp[static_cast<std::size_t>(c)])] = x[c];
    }
    found.emplace(std::move(key), std::move(dense));
  };

  // plain lexicographic combination enumeration per support size
  for (int s = 1; s <= n + 1 && s <= static_cast<int>(cells); ++s) {
    comb.resize(static_cast<std::size_t>(s));
    for (int i = 0; i < s; ++i) comb[static_cast<std::size_t>(i)] = i;
    for (;;) {
      try_support(comb);
      int i = s - 1;
      while (i >= 0 && comb[static_cast<std::size_t>(i)] == static_cast<int>(cells) - s + i) --i;
      if (i < 0) break;
      ++comb[static_cast<std::size_t>(i)];
      for (int k = i + 1; k < s; ++k) comb[static_cast<std::size_t>(k)] = comb[static_cast<std::size_t>(k - 1)] + 1;
    }
  }

  std::vector<MultiSumPmf> rays;
  rays.reserve(found.size());
  for (auto& [key, dense] : found) {
    double sum = 0.0;
    for (double v : dense) sum += v;
    for (double& v : dense) v /= sum;
    rays.emplace_back(shape, std::move(dense));
  }
  return rays;
}

}  // namespace exchpoly::pex
