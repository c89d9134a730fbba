// Copyright Contributors to the cdconv project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "cdconv/conv.hpp"
#include "cdconv/kernel.hpp"
#include "cdconv/matrix.hpp"

namespace cdconv {

// Times are microseconds. Files carry integers; in memory they are doubles so
// that sub-microsecond fixtures and rescaled streams are representable.
struct Event {
  double t = 0.0;
  std::int32_t x = 0;  // column
  std::int32_t y = 0;  // row
  std::uint8_t polarity = 0;

  friend bool operator==(const Event&, const Event&) = default;
};

struct GridShape {
  std::int32_t height = 0;
  std::int32_t width = 0;

  std::size_t pixels() const noexcept {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }
  bool contains(std::int32_t x, std::int32_t y) const noexcept {
    return x >= 0 && y >= 0 && x < width && y < height;
  }
  std::size_t linear(std::int32_t x, std::int32_t y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(x);
  }
  friend bool operator==(const GridShape&, const GridShape&) = default;
};

// Time-sorted events on a fixed pixel grid.
class EventStream {
 public:
  EventStream() = default;
  EventStream(GridShape grid, std::vector<Event> events);

  GridShape grid() const noexcept { return grid_; }
  const std::vector<Event>& events() const noexcept { return events_; }
  std::size_t size() const noexcept { return events_.size(); }
  bool empty() const noexcept { return events_.empty(); }
  const Event& operator[](std::size_t i) const { return events_[i]; }

  friend bool operator==(const EventStream&, const EventStream&) = default;

 private:
  GridShape grid_;
  std::vector<Event> events_;
};

// h x w spatial window applied with a stride. Offset u = dy * w + dx maps
// output pixel (x', y') to input pixel (stride x' + dx - w/2, stride y' + dy - h/2).
struct SpatialWindow {
  std::int32_t height = 1;
  std::int32_t width = 1;
  std::int32_t stride = 1;

  std::size_t size() const noexcept {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }
  std::int32_t anchor_y() const noexcept { return height / 2; }
  std::int32_t anchor_x() const noexcept { return width / 2; }
  // Output grid for a given input grid: ceil(extent / stride) per axis.
  GridShape output_grid(GridShape input) const;
  void validate() const;

  friend bool operator==(const SpatialWindow&, const SpatialWindow&) = default;
};

struct LIFConfig {
  double tau = 1.0;  // decay time, microseconds
  double v_thresh = 1.0;
  double v_reset = 0.0;
  SpatialWindow window;
};

// Output neurons whose window covers input pixel (x, y), in ascending
// row-major order of the output grid.
std::vector<std::size_t> receptive_outputs(const SpatialWindow& window, GridShape input,
                                           std::int32_t x, std::int32_t y);

// Leaky integrate-and-fire subsampling. Each input event adds 1/n to the
// voltage of the n output neurons it touches after exponential decay; a
// neuron whose voltage exceeds v_thresh fires at the input time and resets.
EventStream lif_subsample(const EventStream& input, const LIFConfig& cfg);

// Two one-hot columns per event: column 0 for polarity 1, column 1 for 0.
Matrix polarity_features(const EventStream& stream);

// Kernel of sum_v exp(-lambda_uv dt) theta_uv over a spatial window, with dt
// measured in units of tau. Index uv = u * num_decays + v.
class EventKernelParams {
 public:
  EventKernelParams() = default;
  EventKernelParams(SpatialWindow window, std::size_t num_decays, double tau,
                    std::vector<double> lambda, std::vector<Matrix> theta);

  const SpatialWindow& window() const noexcept { return window_; }
  std::size_t num_offsets() const noexcept { return window_.size(); }
  std::size_t num_decays() const noexcept { return num_decays_; }
  std::size_t num_terms() const noexcept { return lambda_.size(); }
  double tau() const noexcept { return tau_; }
  std::size_t in_channels() const noexcept { return in_channels_; }
  std::size_t out_channels() const noexcept { return out_channels_; }

  double lambda(std::size_t u, std::size_t v) const { return lambda_[u * num_decays_ + v]; }
  const Matrix& theta(std::size_t u, std::size_t v) const { return theta_[u * num_decays_ + v]; }
  const std::vector<double>& lambdas() const noexcept { return lambda_; }
  const std::vector<Matrix>& thetas() const noexcept { return theta_; }

  // Replaces lambda, projecting onto lambda >= floor.
  void set_lambdas(std::vector<double> lambda, double floor);
  void set_thetas(std::vector<Matrix> theta);

  friend bool operator==(const EventKernelParams&, const EventKernelParams&) = default;

 private:
  SpatialWindow window_;
  std::size_t num_decays_ = 0;
  double tau_ = 1.0;
  std::size_t in_channels_ = 0;
  std::size_t out_channels_ = 0;
  std::vector<double> lambda_;
  std::vector<Matrix> theta_;
};

// Causal edges from input events to output events. dt is (t_out - t_in)/tau.
struct EventEdgeSet {
  std::size_t num_out = 0;
  std::size_t num_in = 0;
  std::vector<std::size_t> row_splits{0};
  std::vector<std::size_t> in_index;
  std::vector<std::size_t> offset;  // spatial offset u
  std::vector<double> dt;
  std::optional<double> crop_window;

  std::size_t num_edges() const noexcept { return in_index.size(); }
};

// crop_window, when set, drops edges with dt > crop_window.
EventEdgeSet build_event_edges(const EventStream& input, const EventStream& output,
                               const SpatialWindow& window, double tau,
                               std::optional<double> crop_window);

Matrix event_conv_forward(const EventEdgeSet& edges, const Matrix& features,
                          const EventKernelParams& params);

struct EventConvGradients {
  Matrix features;
  std::vector<Matrix> theta;
  std::vector<double> lambda;
};

EventConvGradients event_conv_backward(const EventEdgeSet& edges, const Matrix& features,
                                       const EventKernelParams& params,
                                       const Matrix& grad_out);

// The same convolution as a generic sparse conv with M = M_u M_v basis
// columns: value(e, uv) = exp(-lambda_uv dt_e) when u matches the edge offset.
NeighborhoodTensor induced_neighborhood_tensor(const EventEdgeSet& edges,
                                               const EventKernelParams& params);
KernelParams induced_kernel_params(const EventKernelParams& params);

}  // namespace cdconv
