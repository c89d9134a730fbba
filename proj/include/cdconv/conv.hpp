// Copyright Contributors to the cdconv project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cdconv/kernel.hpp"
#include "cdconv/matrix.hpp"

namespace cdconv {

// M dense Q x P blocks, one per basis function.
class KernelParams {
 public:
  KernelParams() = default;
  KernelParams(std::size_t num_basis, std::size_t in_channels, std::size_t out_channels,
               std::vector<double> values);
  explicit KernelParams(std::vector<Matrix> blocks);

  std::size_t num_basis() const noexcept { return blocks_.size(); }
  std::size_t in_channels() const noexcept { return in_channels_; }
  std::size_t out_channels() const noexcept { return out_channels_; }
  const Matrix& block(std::size_t m) const { return blocks_[m]; }
  Matrix& block(std::size_t m) { return blocks_[m]; }
  const std::vector<Matrix>& blocks() const noexcept { return blocks_; }

  // Row-major M x Q x P.
  std::vector<double> flatten() const;

  friend bool operator==(const KernelParams&, const KernelParams&) = default;

 private:
  std::size_t in_channels_ = 0;
  std::size_t out_channels_ = 0;
  std::vector<Matrix> blocks_;
};

// M x P parameters of the featureless convolution.
struct FeaturelessParams {
  Matrix weights;
};

enum class Ordering {
  kLeftToRight,  // (N F) Theta
  kRightToLeft,  // N (F Theta)
};

const char* ordering_name(Ordering ordering);

// Multiply-add tally for a single call. Null pointer disables counting.
struct OpCounter {
  std::uint64_t multiply_adds = 0;
};

// F' = sum_m N^(m) F Theta^(m). Output rows with no edges are zero.
Matrix conv_forward(const NeighborhoodTensor& nt, const Matrix& features,
                    const KernelParams& params, Ordering ordering,
                    OpCounter* counter = nullptr);

struct ConvGradients {
  Matrix features;
  KernelParams params;
};

ConvGradients conv_backward(const NeighborhoodTensor& nt, const Matrix& features,
                            const KernelParams& params, const Matrix& grad_out);

// Z = G Phi0 where G[i][m] sums basis values over the edges of output i.
Matrix featureless_forward(const NeighborhoodTensor& nt, const FeaturelessParams& params,
                           OpCounter* counter = nullptr);

struct ConvShape {
  std::size_t num_in;   // S
  std::size_t num_out;  // S'
  std::size_t in_channels;
  std::size_t out_channels;
  std::size_t num_basis;
  std::size_t num_edges;
};

// Multiply-adds of each evaluation order: M Q (E + S' P) and M P (E + S Q).
std::uint64_t left_to_right_cost(const ConvShape& shape);
std::uint64_t right_to_left_cost(const ConvShape& shape);

// Cheaper order; ties go left-to-right.
Ordering choose_ordering(const ConvShape& shape);

struct BatchLayout {
  std::vector<std::size_t> in_sizes;
  std::vector<std::size_t> out_sizes;
  // Prefix sums with a leading 0; the last entry is the batch total.
  std::vector<std::size_t> in_offsets;
  std::vector<std::size_t> out_offsets;
  std::size_t num_in = 0;
  std::size_t num_out = 0;
};

struct BatchedNeighborhood {
  Neighborhood structure;
  BatchLayout layout;
};

struct BatchedTensor {
  NeighborhoodTensor tensor;
  BatchLayout layout;
};

// Ragged batching: block-diagonal concatenation of per-example structures.
BatchedNeighborhood block_diagonalize(std::span<const Neighborhood> parts);
BatchedTensor block_diagonalize(std::span<const NeighborhoodTensor> parts);

}  // namespace cdconv
