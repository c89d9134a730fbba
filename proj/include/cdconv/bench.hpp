// Copyright Contributors to the cdconv project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>

#include "cdconv/conv.hpp"

namespace cdconv {

// Batched kNN point convolution of a fixed shape, timed over `reps` runs.
// Defaults are M=4, P=Q=64, S=S'=4096, 9 neighbours, batch of 8.
struct BenchConfig {
  std::size_t num_in = 4096;
  std::size_t num_out = 4096;
  std::size_t in_channels = 64;
  std::size_t out_channels = 64;
  std::size_t num_basis = 4;
  std::size_t neighbors = 9;
  std::size_t batch = 8;
  std::size_t reps = 1;
  std::uint64_t seed = 0;
};

struct BenchReport {
  std::size_t num_edges = 0;
  std::size_t dim = 3;
  Ordering ordering = Ordering::kLeftToRight;
  std::uint64_t left_to_right_madds = 0;   // closed form
  std::uint64_t right_to_left_madds = 0;   // closed form
  std::uint64_t counted_forward_madds = 0;  // instrumented, chosen ordering
  std::size_t runs = 0;
  double forward_ms = 0.0;   // median
  double backward_ms = 0.0;  // median
  double setup_ms = 0.0;
};

BenchReport run_bench(const BenchConfig& config);

}  // namespace cdconv
