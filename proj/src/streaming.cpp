// Copyright Contributors to the cdconv project
// SPDX-License-Identifier: Apache-2.0
#include "cdconv/streaming.hpp"

#include <cmath>
#include <string>

#include "cdconv/error.hpp"

namespace cdconv {

StreamState::StreamState(GridShape input_grid, EventKernelParams params)
    : grid_(input_grid),
      params_(std::move(params)),
      terms_(params_.num_terms()),
      channels_(params_.in_channels()),
      z_(grid_.pixels() * terms_ * channels_, 0.0),
      last_(grid_.pixels(), 0.0) {
  require(grid_.height > 0 && grid_.width > 0, ErrorKind::kArgument,
          "stream grid must have positive extents");
}

std::span<const double> StreamState::ema(std::int32_t x, std::int32_t y, std::size_t uv) const {
  return {z_.data() + (grid_.linear(x, y) * terms_ + uv) * channels_, channels_};
}

void StreamState::on_input(double t, std::int32_t x, std::int32_t y,
                           std::span<const double> features) {
  require(grid_.contains(x, y), ErrorKind::kRange, "input event outside the pixel grid");
  require(features.size() == channels_, ErrorKind::kArgument,
          "input feature width does not match the kernel");
  const std::size_t pix = grid_.linear(x, y);
  require(t >= last_[pix], ErrorKind::kOrdering,
          "input at t=" + std::to_string(t) + " precedes the pixel's last update");
  const double gap = (t - last_[pix]) / params_.tau();
  double* z = z_.data() + pix * terms_ * channels_;
  for (std::size_t uv = 0; uv < terms_; ++uv) {
    const double decay = std::exp(-params_.lambdas()[uv] * gap);
    for (std::size_t a = 0; a < channels_; ++a, ++z) *z = features[a] + decay * *z;
  }
  last_[pix] = t;
}

std::vector<double> StreamState::query(double t, std::int32_t x, std::int32_t y) const {
  const SpatialWindow& window = params_.window();
  require(output_grid().contains(x, y), ErrorKind::kArgument,
          "output pixel outside the output grid");
  const std::size_t p = params_.out_channels();
  const std::size_t num_decays = params_.num_decays();
  std::vector<double> out(p, 0.0);
  for (std::int32_t dy = 0; dy < window.height; ++dy) {
    for (std::int32_t dx = 0; dx < window.width; ++dx) {
      const std::int32_t px = x * window.stride + dx - window.anchor_x();
      const std::int32_t py = y * window.stride + dy - window.anchor_y();
      if (!grid_.contains(px, py)) continue;
      const std::size_t pix = grid_.linear(px, py);
      const double gap = (t - last_[pix]) / params_.tau();
      const std::size_t u = static_cast<std::size_t>(dy * window.width + dx);
      for (std::size_t v = 0; v < num_decays; ++v) {
        const std::size_t uv = u * num_decays + v;
        const double decay = std::exp(-params_.lambdas()[uv] * gap);
        const double* z = z_.data() + (pix * terms_ + uv) * channels_;
        const Matrix& theta = params_.thetas()[uv];
        for (std::size_t a = 0; a < channels_; ++a) {
          const double s = decay * z[a];
          const auto th = theta.row(a);
          for (std::size_t b = 0; b < p; ++b) out[b] += s * th[b];
        }
      }
    }
  }
  return out;
}

StreamState stream_init(GridShape input_grid, const EventKernelParams& params) {
  return StreamState(input_grid, params);
}

Matrix streaming_conv(const EventStream& input, const Matrix& features,
                      const EventStream& output, const EventKernelParams& params) {
  require(features.rows() == input.size(), ErrorKind::kArgument,
          "feature rows do not match the input event count");
  require(output.grid() == params.window().output_grid(input.grid()), ErrorKind::kArgument,
          "output grid does not match the strided input grid");
  StreamState state(input.grid(), params);
  Matrix out(output.size(), params.out_channels());
  std::size_t next_in = 0;
  for (std::size_t i = 0; i < output.size(); ++i) {
    const Event& o = output[i];
    while (next_in < input.size() && input[next_in].t <= o.t) {
      const Event& ev = input[next_in];
      state.on_input(ev.t, ev.x, ev.y, features.row(next_in));
      ++next_in;
    }
    const auto f = state.query(o.t, o.x, o.y);
    std::copy(f.begin(), f.end(), out.row(i).begin());
  }
  return out;
}

double dual_equivalence_check(const EventStream& input, const Matrix& features,
                              const EventStream& output, const EventKernelParams& params) {
  if (output.empty()) return 0.0;
  const Matrix streamed = streaming_conv(input, features, output, params);
  const EventEdgeSet edges =
      build_event_edges(input, output, params.window(), params.tau(), std::nullopt);
  const Matrix batched = event_conv_forward(edges, features, params);
  double worst = 0.0;
  for (std::size_t i = 0; i < batched.rows(); ++i) {
    double scale = 0.0;
    double diff = 0.0;
    for (std::size_t b = 0; b < batched.cols(); ++b) {
      scale = std::max(scale, std::abs(batched(i, b)));
      diff = std::max(diff, std::abs(batched(i, b) - streamed(i, b)));
    }
    if (diff == 0.0) continue;
    worst = std::max(worst, diff / std::max(scale, std::numeric_limits<double>::min()));
  }
  return worst;
}

}  // namespace cdconv
