#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "exchpoly/common.hpp"

namespace exchpoly {

inline constexpr double kPmfSumTol = 1e-12;

// Distribution of the coordinate sum Y = X_1 + ... + X_d on {0,...,d}.
class SumPmf {
 public:
  explicit SumPmf(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.size() < 2) throw std::invalid_argument("SumPmf: need d >= 1 (at least 2 entries)");
    double sum = 0.0;
    for (double v : probs_) {
      if (!(v >= 0.0)) throw std::invalid_argument("SumPmf: negative or NaN entry");
      sum += v;
    }
    if (std::fabs(sum - 1.0) > kPmfSumTol) throw std::invalid_argument("SumPmf: entries must sum to 1");
  }

  int d() const { return static_cast<int>(probs_.size()) - 1; }
  const std::vector<double>& probs() const { return probs_; }
  double operator[](int j) const { return probs_[static_cast<std::size_t>(j)]; }

  double mean() const {
    double m = 0.0;
    for (std::size_t j = 1; j < probs_.size(); ++j) m += static_cast<double>(j) * probs_[j];
    return m;
  }

 private:
  std::vector<double> probs_;
};

// Exchangeable pmf in compressed form: f_j is the common mass of every
// binary vector of weight j, so sum_j C(d,j) f_j = 1.
class ExchangeablePmf {
 public:
  explicit ExchangeablePmf(std::vector<double> f) : f_(std::move(f)) {
    if (f_.size() < 2) throw std::invalid_argument("ExchangeablePmf: need d >= 1");
    const int d = this->d();
    double sum = 0.0;
    for (int j = 0; j <= d; ++j) {
      if (!(f_[static_cast<std::size_t>(j)] >= 0.0))
        throw std::invalid_argument("ExchangeablePmf: negative or NaN entry");
      sum += binom(d, j) * f_[static_cast<std::size_t>(j)];
    }
    if (!(std::fabs(sum - 1.0) <= kPmfSumTol))
      throw std::invalid_argument("ExchangeablePmf: weighted entries must sum to 1");
  }

  int d() const { return static_cast<int>(f_.size()) - 1; }
  const std::vector<double>& f() const { return f_; }
  double operator[](int j) const { return f_[static_cast<std::size_t>(j)]; }

 private:
  std::vector<double> f_;
};

// p_j = C(d,j) f_j
inline SumPmf map_H(const ExchangeablePmf& f) {
  const int d = f.d();
  std::vector<double> p(static_cast<std::size_t>(d) + 1);
  for (int j = 0; j <= d; ++j) p[static_cast<std::size_t>(j)] = binom(d, j) * f[j];
  return SumPmf(std::move(p));
}

inline ExchangeablePmf map_H_inv(const SumPmf& pY) {
  const int d = pY.d();
  std::vector<double> f(static_cast<std::size_t>(d) + 1);
  for (int j = 0; j <= d; ++j) f[static_cast<std::size_t>(j)] = pY[j] / binom(d, j);
  return ExchangeablePmf(std::move(f));
}

// The d+1 extremal points of the simplex of exchangeable pmfs: g'_j spreads
// mass 1/C(d,j) over every weight-j vector.
inline std::vector<ExchangeablePmf> exchangeable_simplex_vertices(int d) {
  if (d < 1) throw std::domain_error("exchangeable_simplex_vertices: d must be >= 1");
  std::vector<ExchangeablePmf> out;
  out.reserve(static_cast<std::size_t>(d) + 1);
  for (int j = 0; j <= d; ++j) {
    std::vector<double> f(static_cast<std::size_t>(d) + 1, 0.0);
    f[static_cast<std::size_t>(j)] = 1.0 / binom(d, j);
    out.emplace_back(std::move(f));
  }
  return out;
}

}  // namespace exchpoly
