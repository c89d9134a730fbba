// Copyright Contributors to the cdconv project
// SPDX-License-Identifier: Apache-2.0
#include "cdconv/bench.hpp"

#include <algorithm>
#include <chrono>

#include "cdconv/error.hpp"
#include "cdconv/geometry.hpp"
#include "cdconv/kernel.hpp"
#include "cdconv/random.hpp"

namespace cdconv {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

// The first `count` monomials in canonical order, raising the order as needed.
BasisSet truncated_basis(std::size_t dim, std::size_t count) {
  std::uint32_t order = 0;
  while (monomial_count(dim, order) < count) ++order;
  BasisSet full = monomial_basis(dim, order);
  std::vector<MultiIndex> exps(full.exponents().begin(),
                               full.exponents().begin() + static_cast<std::ptrdiff_t>(count));
  return BasisSet(dim, std::move(exps));
}

PointCloud random_cloud(Rng& rng, std::size_t n, std::size_t dim) {
  std::vector<double> coords(n * dim);
  for (double& c : coords) c = rng.uniform();
  return PointCloud(dim, std::move(coords));
}

}  // namespace

BenchReport run_bench(const BenchConfig& c) {
  require(c.num_in > 0 && c.num_out > 0 && c.in_channels > 0 && c.out_channels > 0 &&
              c.num_basis > 0 && c.neighbors > 0 && c.batch > 0,
          ErrorKind::kArgument, "benchmark sizes must be positive");
  require(c.neighbors <= c.num_in, ErrorKind::kArgument,
          "neighbour count exceeds the input cloud size");
  BenchReport report;
  report.num_edges = c.batch * c.num_out * c.neighbors;
  const ConvShape shape{c.batch * c.num_in,      c.batch * c.num_out, c.in_channels,
                        c.out_channels,          c.num_basis,         report.num_edges};
  report.left_to_right_madds = left_to_right_cost(shape);
  report.right_to_left_madds = right_to_left_cost(shape);
  report.ordering = choose_ordering(shape);
  if (c.reps == 0) return report;

  const auto setup_start = Clock::now();
  Rng rng(c.seed);
  const BasisSet basis = truncated_basis(report.dim, c.num_basis);
  std::vector<NeighborhoodTensor> parts;
  for (std::size_t b = 0; b < c.batch; ++b) {
    const PointCloud in = random_cloud(rng, c.num_in, report.dim);
    const PointCloud out = c.num_out == c.num_in ? in : random_cloud(rng, c.num_out, report.dim);
    parts.push_back(build_neighborhood_tensor(knn_search(in, out, c.neighbors), basis, false));
  }
  const BatchedTensor batched = block_diagonalize(parts);
  Matrix features(shape.num_in, c.in_channels);
  for (double& v : features.values()) v = rng.uniform(-1.0, 1.0);
  std::vector<double> theta(c.num_basis * c.in_channels * c.out_channels);
  for (double& v : theta) v = rng.uniform(-1.0, 1.0);
  const KernelParams params(c.num_basis, c.in_channels, c.out_channels, std::move(theta));
  report.setup_ms = ms_since(setup_start);

  std::vector<double> fwd;
  std::vector<double> bwd;
  for (std::size_t r = 0; r < c.reps; ++r) {
    OpCounter counter;
    auto t0 = Clock::now();
    const Matrix out = conv_forward(batched.tensor, features, params, report.ordering, &counter);
    fwd.push_back(ms_since(t0));
    report.counted_forward_madds = counter.multiply_adds;
    t0 = Clock::now();
    const ConvGradients grads = conv_backward(batched.tensor, features, params, out);
    bwd.push_back(ms_since(t0));
  }
  report.runs = c.reps;
  report.forward_ms = median(fwd);
  report.backward_ms = median(bwd);
  return report;
}

}  // namespace cdconv
