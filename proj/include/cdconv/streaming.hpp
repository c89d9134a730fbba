// Copyright Contributors to the cdconv project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cdconv/events.hpp"

namespace cdconv {

// Per-pixel exponential moving averages for online event convolution.
// Each pixel holds one Q-vector z per (u, v) term plus a last-update time;
// memory is fixed at H W (M_u M_v Q + 1) doubles whatever the event count.
//
// Single writer: on_input mutates, query only reads.
class StreamState {
 public:
  StreamState(GridShape input_grid, EventKernelParams params);

  const GridShape& input_grid() const noexcept { return grid_; }
  GridShape output_grid() const { return params_.window().output_grid(grid_); }
  const EventKernelParams& params() const noexcept { return params_; }

  // z_uv <- f + exp(-lambda_uv (t - tau_x) / t~) z_uv for every term; tau_x <- t.
  void on_input(double t, std::int32_t x, std::int32_t y, std::span<const double> features);

  // Decays the receptive-field state to t and contracts with theta.
  std::vector<double> query(double t, std::int32_t x, std::int32_t y) const;

  // Number of doubles held, i.e. H W (M_u M_v Q + 1).
  std::size_t state_size() const noexcept { return z_.size() + last_.size(); }

  std::span<const double> ema(std::int32_t x, std::int32_t y, std::size_t uv) const;
  double last_update(std::int32_t x, std::int32_t y) const { return last_[grid_.linear(x, y)]; }

  friend bool operator==(const StreamState&, const StreamState&) = default;

 private:
  GridShape grid_;
  EventKernelParams params_;
  std::size_t terms_;
  std::size_t channels_;
  std::vector<double> z_;
  std::vector<double> last_;
};

StreamState stream_init(GridShape input_grid, const EventKernelParams& params);

// Replays inputs and outputs in global time order (inputs first on equal
// timestamps) and returns one feature row per output event.
Matrix streaming_conv(const EventStream& input, const Matrix& features,
                      const EventStream& output, const EventKernelParams& params);

// Max normwise relative difference between streaming_conv and the batch
// event_conv_forward over uncropped edges.
double dual_equivalence_check(const EventStream& input, const Matrix& features,
                              const EventStream& output, const EventKernelParams& params);

}  // namespace cdconv
