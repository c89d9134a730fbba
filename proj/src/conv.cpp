// Copyright Contributors to the cdconv project
// SPDX-License-Identifier: Apache-2.0
#include "cdconv/conv.hpp"

#include <string>

#include "cdconv/error.hpp"

namespace cdconv {

KernelParams::KernelParams(std::size_t num_basis, std::size_t in_channels,
                           std::size_t out_channels, std::vector<double> values)
    : in_channels_(in_channels), out_channels_(out_channels) {
  const std::size_t block = in_channels * out_channels;
  require(values.size() == num_basis * block, ErrorKind::kArgument,
          "kernel payload does not match M x Q x P");
  blocks_.reserve(num_basis);
  for (std::size_t m = 0; m < num_basis; ++m) {
    blocks_.emplace_back(in_channels, out_channels,
                         std::vector<double>(values.begin() + static_cast<std::ptrdiff_t>(m * block),
                                             values.begin() + static_cast<std::ptrdiff_t>((m + 1) * block)));
  }
}

KernelParams::KernelParams(std::vector<Matrix> blocks) : blocks_(std::move(blocks)) {
  if (!blocks_.empty()) {
    in_channels_ = blocks_.front().rows();
    out_channels_ = blocks_.front().cols();
  }
  for (const auto& b : blocks_) {
    require(b.rows() == in_channels_ && b.cols() == out_channels_, ErrorKind::kArgument,
            "kernel blocks must share one Q x P shape");
  }
}

std::vector<double> KernelParams::flatten() const {
  std::vector<double> out;
  out.reserve(blocks_.size() * in_channels_ * out_channels_);
  for (const auto& b : blocks_) out.insert(out.end(), b.values().begin(), b.values().end());
  return out;
}

const char* ordering_name(Ordering ordering) {
  return ordering == Ordering::kLeftToRight ? "left-to-right" : "right-to-left";
}

namespace {

void check_shapes(const NeighborhoodTensor& nt, const Matrix& features,
                  const KernelParams& params) {
  require(features.rows() == nt.num_in(), ErrorKind::kArgument,
          "feature rows (" + std::to_string(features.rows()) + ") != input cloud size (" +
              std::to_string(nt.num_in()) + ")");
  require(params.num_basis() == nt.num_basis(), ErrorKind::kArgument,
          "kernel has " + std::to_string(params.num_basis()) + " blocks but the basis has " +
              std::to_string(nt.num_basis()));
  require(features.cols() == params.in_channels(), ErrorKind::kArgument,
          "feature channels do not match kernel input channels");
}

// out(i, :) += sum over edges of i of value(e, m) * in(j, :).
void scatter_rows(const NeighborhoodTensor& nt, std::size_t m, const Matrix& in, Matrix& out) {
  const auto& splits = nt.structure().row_splits();
  const auto& in_index = nt.structure().in_index();
  const std::size_t cols = in.cols();
  for (std::size_t i = 0; i < nt.num_out(); ++i) {
    auto dst = out.row(i);
    for (std::size_t e = splits[i]; e < splits[i + 1]; ++e) {
      const double v = nt.value(e, m);
      const auto src = in.row(in_index[e]);
      for (std::size_t c = 0; c < cols; ++c) dst[c] += v * src[c];
    }
  }
}

// out += a * b, dense.
void gemm_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  const std::size_t inner = a.cols();
  const std::size_t cols = b.cols();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto dst = out.row(r);
    const auto lhs = a.row(r);
    for (std::size_t k = 0; k < inner; ++k) {
      const double s = lhs[k];
      const auto rhs = b.row(k);
      for (std::size_t c = 0; c < cols; ++c) dst[c] += s * rhs[c];
    }
  }
}

void tally(OpCounter* counter, std::uint64_t n) {
  if (counter) counter->multiply_adds += n;
}

}  // namespace

Matrix conv_forward(const NeighborhoodTensor& nt, const Matrix& features,
                    const KernelParams& params, Ordering ordering, OpCounter* counter) {
  check_shapes(nt, features, params);
  const std::size_t q = params.in_channels();
  const std::size_t p = params.out_channels();
  const std::uint64_t edges = nt.num_edges();
  Matrix out(nt.num_out(), p);
  if (ordering == Ordering::kLeftToRight) {
    Matrix gathered(nt.num_out(), q);
    for (std::size_t m = 0; m < nt.num_basis(); ++m) {
      gathered.fill(0.0);
      scatter_rows(nt, m, features, gathered);
      gemm_acc(gathered, params.block(m), out);
      tally(counter, edges * q + std::uint64_t{nt.num_out()} * q * p);
    }
  } else {
    Matrix transformed(nt.num_in(), p);
    for (std::size_t m = 0; m < nt.num_basis(); ++m) {
      transformed.fill(0.0);
      gemm_acc(features, params.block(m), transformed);
      scatter_rows(nt, m, transformed, out);
      tally(counter, std::uint64_t{nt.num_in()} * q * p + edges * p);
    }
  }
  return out;
}

ConvGradients conv_backward(const NeighborhoodTensor& nt, const Matrix& features,
                            const KernelParams& params, const Matrix& grad_out) {
  check_shapes(nt, features, params);
  const std::size_t q = params.in_channels();
  const std::size_t p = params.out_channels();
  require(grad_out.rows() == nt.num_out() && grad_out.cols() == p, ErrorKind::kArgument,
          "output gradient shape does not match S' x P");
  const auto& splits = nt.structure().row_splits();
  const auto& in_index = nt.structure().in_index();

  Matrix grad_features(nt.num_in(), q);
  std::vector<Matrix> grad_blocks;
  grad_blocks.reserve(nt.num_basis());
  Matrix gathered(nt.num_out(), q);
  Matrix projected(nt.num_out(), q);
  for (std::size_t m = 0; m < nt.num_basis(); ++m) {
    const Matrix& theta = params.block(m);
    // dTheta^(m) = (N^(m) F)^T dF'
    gathered.fill(0.0);
    scatter_rows(nt, m, features, gathered);
    Matrix grad_theta(q, p);
    for (std::size_t i = 0; i < nt.num_out(); ++i) {
      const auto g = gathered.row(i);
      const auto d = grad_out.row(i);
      for (std::size_t a = 0; a < q; ++a) {
        auto dst = grad_theta.row(a);
        for (std::size_t b = 0; b < p; ++b) dst[b] += g[a] * d[b];
      }
    }
    grad_blocks.push_back(std::move(grad_theta));
    // dF += N^(m)^T (dF' Theta^(m)^T)
    for (std::size_t i = 0; i < nt.num_out(); ++i) {
      const auto d = grad_out.row(i);
      auto dst = projected.row(i);
      for (std::size_t a = 0; a < q; ++a) {
        const auto th = theta.row(a);
        double acc = 0.0;
        for (std::size_t b = 0; b < p; ++b) acc += th[b] * d[b];
        dst[a] = acc;
      }
    }
    for (std::size_t i = 0; i < nt.num_out(); ++i) {
      const auto src = projected.row(i);
      for (std::size_t e = splits[i]; e < splits[i + 1]; ++e) {
        const double v = nt.value(e, m);
        auto dst = grad_features.row(in_index[e]);
        for (std::size_t a = 0; a < q; ++a) dst[a] += v * src[a];
      }
    }
  }
  return {std::move(grad_features), KernelParams(std::move(grad_blocks))};
}

Matrix featureless_forward(const NeighborhoodTensor& nt, const FeaturelessParams& params,
                           OpCounter* counter) {
  require(params.weights.rows() == nt.num_basis(), ErrorKind::kArgument,
          "featureless weights need one row per basis function");
  const std::size_t num_basis = nt.num_basis();
  const auto& splits = nt.structure().row_splits();
  Matrix summed(nt.num_out(), num_basis);
  for (std::size_t i = 0; i < nt.num_out(); ++i) {
    auto dst = summed.row(i);
    for (std::size_t e = splits[i]; e < splits[i + 1]; ++e) {
      const auto v = nt.edge_values(e);
      for (std::size_t m = 0; m < num_basis; ++m) dst[m] += v[m];
    }
  }
  Matrix out(nt.num_out(), params.weights.cols());
  gemm_acc(summed, params.weights, out);
  tally(counter, std::uint64_t{nt.num_out()} * num_basis * params.weights.cols());
  return out;
}

std::uint64_t left_to_right_cost(const ConvShape& s) {
  return std::uint64_t{s.num_basis} * s.in_channels *
         (std::uint64_t{s.num_edges} + std::uint64_t{s.num_out} * s.out_channels);
}

std::uint64_t right_to_left_cost(const ConvShape& s) {
  return std::uint64_t{s.num_basis} * s.out_channels *
         (std::uint64_t{s.num_edges} + std::uint64_t{s.num_in} * s.in_channels);
}

Ordering choose_ordering(const ConvShape& shape) {
  return left_to_right_cost(shape) <= right_to_left_cost(shape) ? Ordering::kLeftToRight
                                                                : Ordering::kRightToLeft;
}

namespace {

BatchLayout make_layout(std::span<const Neighborhood* const> parts) {
  BatchLayout layout;
  std::size_t in_total = 0;
  std::size_t out_total = 0;
  for (const auto* nb : parts) {
    layout.in_sizes.push_back(nb->num_in());
    layout.out_sizes.push_back(nb->num_out());
    layout.in_offsets.push_back(in_total);
    layout.out_offsets.push_back(out_total);
    in_total += nb->num_in();
    out_total += nb->num_out();
  }
  layout.num_in = in_total;
  layout.num_out = out_total;
  return layout;
}

BatchedNeighborhood concat(std::span<const Neighborhood* const> parts) {
  BatchedNeighborhood out{{}, make_layout(parts)};
  std::size_t dim = 0;
  for (const auto* nb : parts) {
    if (nb->num_edges() == 0) continue;
    if (dim == 0) dim = nb->dim();
    require(nb->dim() == dim, ErrorKind::kArgument, "batched parts differ in dimension");
  }
  if (dim == 0 && !parts.empty()) dim = parts.front()->dim();
  std::optional<double> radius = parts.empty() ? std::nullopt : parts.front()->radius();
  for (const auto* nb : parts) {
    if (nb->radius() != radius) radius = std::nullopt;
  }
  std::vector<std::size_t> splits{0};
  std::vector<std::size_t> in_index;
  std::vector<double> deltas;
  for (std::size_t b = 0; b < parts.size(); ++b) {
    const Neighborhood& nb = *parts[b];
    const std::size_t edge_base = in_index.size();
    for (std::size_t i = 0; i < nb.num_out(); ++i) {
      splits.push_back(edge_base + nb.row_splits()[i + 1]);
    }
    for (std::size_t j : nb.in_index()) in_index.push_back(j + out.layout.in_offsets[b]);
    deltas.insert(deltas.end(), nb.deltas().begin(), nb.deltas().end());
  }
  out.structure = Neighborhood(out.layout.num_out, out.layout.num_in,
                               dim, std::move(splits), std::move(in_index), std::move(deltas),
                               radius);
  return out;
}

}  // namespace

BatchedNeighborhood block_diagonalize(std::span<const Neighborhood> parts) {
  std::vector<const Neighborhood*> ptrs;
  for (const auto& nb : parts) ptrs.push_back(&nb);
  return concat(ptrs);
}

BatchedTensor block_diagonalize(std::span<const NeighborhoodTensor> parts) {
  std::vector<const Neighborhood*> ptrs;
  for (const auto& nt : parts) {
    require(nt.weighted() == parts.front().weighted(), ErrorKind::kArgument,
            "cannot batch weighted with unweighted tensors");
    require(nt.num_basis() == parts.front().num_basis(), ErrorKind::kArgument,
            "batched tensors must share one basis");
    ptrs.push_back(&nt.structure());
  }
  BatchedNeighborhood batched = concat(ptrs);
  std::vector<double> values;
  for (const auto& nt : parts) values.insert(values.end(), nt.values().begin(), nt.values().end());
  const std::size_t num_basis = parts.empty() ? 0 : parts.front().num_basis();
  const bool weighted = !parts.empty() && parts.front().weighted();
  return {NeighborhoodTensor(std::move(batched.structure), num_basis, std::move(values), weighted),
          std::move(batched.layout)};
}

}  // namespace cdconv
