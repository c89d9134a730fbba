// Copyright Contributors to the cdconv project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cdconv/geometry.hpp"

namespace cdconv {

using MultiIndex = std::vector<std::uint32_t>;

// Monomials p(dx) = prod_d dx_d^alpha_d with |alpha| <= max_order.
// Ordered by total degree, then by descending exponent tuple, so that in 2-D
// order 1 reads 1, x, y.
class BasisSet {
 public:
  BasisSet() = default;
  BasisSet(std::size_t dim, std::vector<MultiIndex> exponents);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return exponents_.size(); }
  const std::vector<MultiIndex>& exponents() const noexcept { return exponents_; }
  std::uint32_t degree(std::size_t m) const;

  // Writes size() values for edge vector dx into out.
  void eval(std::span<const double> dx, std::span<double> out) const;
  std::vector<double> eval(std::span<const double> dx) const;

  friend bool operator==(const BasisSet&, const BasisSet&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<MultiIndex> exponents_;
};

BasisSet monomial_basis(std::size_t dim, std::uint32_t max_order);

// binomial(dim + order, order): the size of monomial_basis(dim, order).
std::size_t monomial_count(std::size_t dim, std::uint32_t max_order);

// Per-edge basis values: values[e * M + m] is entry (out(e), in(e)) of the
// m-th sparse neighborhood matrix.
class NeighborhoodTensor {
 public:
  NeighborhoodTensor() = default;
  NeighborhoodTensor(Neighborhood structure, std::size_t num_basis, std::vector<double> values,
                     bool weighted);

  const Neighborhood& structure() const noexcept { return structure_; }
  std::size_t num_basis() const noexcept { return num_basis_; }
  std::size_t num_edges() const noexcept { return structure_.num_edges(); }
  std::size_t num_out() const noexcept { return structure_.num_out(); }
  std::size_t num_in() const noexcept { return structure_.num_in(); }
  bool weighted() const noexcept { return weighted_; }

  double value(std::size_t e, std::size_t m) const { return values_[e * num_basis_ + m]; }
  std::span<const double> edge_values(std::size_t e) const {
    return {values_.data() + e * num_basis_, num_basis_};
  }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  Neighborhood structure_;
  std::size_t num_basis_ = 0;
  std::vector<double> values_;
  bool weighted_ = false;
};

// w(d) = 1 - d / r.
double radius_weight(double dist, double radius);

// Unweighted: values = p_m(dx_e). Weighted: values = (w_e / W_i) p_m(dx_e)
// with W_i the sum of w over the edges of output i; rows of an output whose
// total weight is zero are all zero.
NeighborhoodTensor build_neighborhood_tensor(const Neighborhood& nb, const BasisSet& basis,
                                             bool weighted);

}  // namespace cdconv
