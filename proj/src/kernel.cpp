// Copyright Contributors to the cdconv project
// SPDX-License-Identifier: Apache-2.0
#include "cdconv/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cdconv/error.hpp"

namespace cdconv {

BasisSet::BasisSet(std::size_t dim, std::vector<MultiIndex> exponents)
    : dim_(dim), exponents_(std::move(exponents)) {
  require(dim_ > 0, ErrorKind::kArgument, "basis dimension must be positive");
  for (const auto& alpha : exponents_) {
    require(alpha.size() == dim_, ErrorKind::kArgument, "multi-index has wrong dimension");
  }
}

std::uint32_t BasisSet::degree(std::size_t m) const {
  return std::accumulate(exponents_[m].begin(), exponents_[m].end(), std::uint32_t{0});
}

void BasisSet::eval(std::span<const double> dx, std::span<double> out) const {
  for (std::size_t m = 0; m < exponents_.size(); ++m) {
    double v = 1.0;
    for (std::size_t d = 0; d < dim_; ++d) {
      for (std::uint32_t k = 0; k < exponents_[m][d]; ++k) v *= dx[d];
    }
    out[m] = v;
  }
}

std::vector<double> BasisSet::eval(std::span<const double> dx) const {
  require(dx.size() == dim_, ErrorKind::kArgument, "edge vector has wrong dimension");
  std::vector<double> out(size());
  eval(dx, out);
  return out;
}

BasisSet monomial_basis(std::size_t dim, std::uint32_t max_order) {
  require(dim > 0, ErrorKind::kArgument, "basis dimension must be positive");
  std::vector<MultiIndex> all;
  MultiIndex alpha(dim, 0);
  // Enumerate the box [0, max_order]^dim and keep |alpha| <= max_order.
  while (true) {
    if (std::accumulate(alpha.begin(), alpha.end(), std::uint32_t{0}) <= max_order) {
      all.push_back(alpha);
    }
    std::size_t d = 0;
    for (; d < dim; ++d) {
      if (alpha[d] < max_order) {
        ++alpha[d];
        break;
      }
      alpha[d] = 0;
    }
    if (d == dim) break;
  }
  std::sort(all.begin(), all.end(), [](const MultiIndex& a, const MultiIndex& b) {
    const auto da = std::accumulate(a.begin(), a.end(), std::uint32_t{0});
    const auto db = std::accumulate(b.begin(), b.end(), std::uint32_t{0});
    if (da != db) return da < db;
    return a > b;
  });
  return BasisSet(dim, std::move(all));
}

std::size_t monomial_count(std::size_t dim, std::uint32_t max_order) {
  // binomial(dim + k, k) built incrementally; each partial product is exact.
  std::size_t result = 1;
  for (std::uint32_t i = 1; i <= max_order; ++i) result = result * (dim + i) / i;
  return result;
}

NeighborhoodTensor::NeighborhoodTensor(Neighborhood structure, std::size_t num_basis,
                                       std::vector<double> values, bool weighted)
    : structure_(std::move(structure)),
      num_basis_(num_basis),
      values_(std::move(values)),
      weighted_(weighted) {
  require(values_.size() == structure_.num_edges() * num_basis_, ErrorKind::kArgument,
          "tensor values do not match edge count x basis size");
}

double radius_weight(double dist, double radius) { return 1.0 - dist / radius; }

NeighborhoodTensor build_neighborhood_tensor(const Neighborhood& nb, const BasisSet& basis,
                                             bool weighted) {
  require(nb.num_edges() == 0 || nb.dim() == basis.dim(), ErrorKind::kArgument,
          "basis dimension does not match neighborhood");
  require(!weighted || nb.radius().has_value(), ErrorKind::kArgument,
          "weighted tensors need a ball neighborhood with a radius");
  const std::size_t num_basis = basis.size();
  std::vector<double> values(nb.num_edges() * num_basis);
  for (std::size_t e = 0; e < nb.num_edges(); ++e) {
    basis.eval(nb.delta(e), std::span<double>(values.data() + e * num_basis, num_basis));
  }
  if (weighted) {
    const double radius = *nb.radius();
    const auto& splits = nb.row_splits();
    std::vector<double> w;
    for (std::size_t i = 0; i < nb.num_out(); ++i) {
      const std::size_t begin = splits[i];
      const std::size_t end = splits[i + 1];
      w.assign(end - begin, 0.0);
      double total = 0.0;
      for (std::size_t e = begin; e < end; ++e) {
        w[e - begin] = radius > 0.0 ? radius_weight(norm(nb.delta(e)), radius) : 0.0;
        total += w[e - begin];
      }
      for (std::size_t e = begin; e < end; ++e) {
        const double scale = total > 0.0 ? w[e - begin] / total : 0.0;
        for (std::size_t m = 0; m < num_basis; ++m) values[e * num_basis + m] *= scale;
      }
    }
  }
  return NeighborhoodTensor(nb, num_basis, std::move(values), weighted);
}

}  // namespace cdconv
