// Copyright Contributors to the cdconv project
// SPDX-License-Identifier: Apache-2.0
#include "cdconv/events.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cdconv/error.hpp"

namespace cdconv {

EventStream::EventStream(GridShape grid, std::vector<Event> events)
    : grid_(grid), events_(std::move(events)) {
  require(grid_.height > 0 && grid_.width > 0, ErrorKind::kArgument,
          "event grid must have positive height and width");
  for (std::size_t i = 0; i < events_.size(); ++i) {
    const Event& ev = events_[i];
    require(std::isfinite(ev.t) && ev.t >= 0.0, ErrorKind::kArgument,
            "event " + std::to_string(i) + " has an invalid timestamp");
    require(grid_.contains(ev.x, ev.y), ErrorKind::kRange,
            "event " + std::to_string(i) + " lies outside the pixel grid");
    if (i > 0) {
      require(events_[i - 1].t <= ev.t, ErrorKind::kSortedness,
              "event " + std::to_string(i) + " is earlier than its predecessor");
    }
  }
}

GridShape SpatialWindow::output_grid(GridShape input) const {
  return {(input.height + stride - 1) / stride, (input.width + stride - 1) / stride};
}

void SpatialWindow::validate() const {
  require(height > 0 && width > 0, ErrorKind::kArgument, "window extents must be positive");
  require(stride > 0, ErrorKind::kArgument, "stride must be positive");
}

std::vector<std::size_t> receptive_outputs(const SpatialWindow& window, GridShape input,
                                           std::int32_t x, std::int32_t y) {
  const GridShape out_grid = window.output_grid(input);
  std::vector<std::size_t> out;
  for (std::int32_t dy = 0; dy < window.height; ++dy) {
    const std::int32_t sy = y - dy + window.anchor_y();
    if (sy < 0 || sy % window.stride != 0) continue;
    for (std::int32_t dx = 0; dx < window.width; ++dx) {
      const std::int32_t sx = x - dx + window.anchor_x();
      if (sx < 0 || sx % window.stride != 0) continue;
      const std::int32_t ox = sx / window.stride;
      const std::int32_t oy = sy / window.stride;
      if (out_grid.contains(ox, oy)) out.push_back(out_grid.linear(ox, oy));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

EventStream lif_subsample(const EventStream& input, const LIFConfig& cfg) {
  cfg.window.validate();
  require(cfg.tau > 0.0, ErrorKind::kArgument, "LIF decay time must be positive");
  require(cfg.v_thresh > 0.0, ErrorKind::kArgument, "LIF threshold must be positive");
  const GridShape in_grid = input.grid();
  const GridShape out_grid = cfg.window.output_grid(in_grid);
  std::vector<double> voltage(out_grid.pixels(), 0.0);
  std::vector<double> last(out_grid.pixels(), 0.0);
  // Receptive fields depend only on the input pixel.
  std::vector<std::vector<std::size_t>> fields(in_grid.pixels());
  std::vector<bool> cached(in_grid.pixels(), false);

  std::vector<Event> fired;
  for (const Event& ev : input.events()) {
    const std::size_t pix = in_grid.linear(ev.x, ev.y);
    if (!cached[pix]) {
      fields[pix] = receptive_outputs(cfg.window, in_grid, ev.x, ev.y);
      cached[pix] = true;
    }
    const auto& field = fields[pix];
    if (field.empty()) continue;
    const double increment = 1.0 / static_cast<double>(field.size());
    for (std::size_t neuron : field) {
      double v = voltage[neuron] * std::exp(-(ev.t - last[neuron]) / cfg.tau) + increment;
      if (v > cfg.v_thresh) {
        v = cfg.v_reset;
        fired.push_back({ev.t, static_cast<std::int32_t>(neuron % out_grid.width),
                         static_cast<std::int32_t>(neuron / out_grid.width), 0});
      }
      voltage[neuron] = v;
      last[neuron] = ev.t;
    }
  }
  return EventStream(out_grid, std::move(fired));
}

Matrix polarity_features(const EventStream& stream) {
  Matrix out(stream.size(), 2);
  for (std::size_t i = 0; i < stream.size(); ++i) {
    out(i, stream[i].polarity ? 0 : 1) = 1.0;
  }
  return out;
}

EventKernelParams::EventKernelParams(SpatialWindow window, std::size_t num_decays, double tau,
                                     std::vector<double> lambda, std::vector<Matrix> theta)
    : window_(window), num_decays_(num_decays), tau_(tau) {
  window_.validate();
  require(num_decays_ > 0, ErrorKind::kArgument, "need at least one decay term");
  require(tau_ > 0.0 && std::isfinite(tau_), ErrorKind::kArgument,
          "time scale must be positive");
  require(lambda.size() == window_.size() * num_decays_, ErrorKind::kArgument,
          "lambda table must have M_u x M_v entries");
  set_lambdas(std::move(lambda), 0.0);
  set_thetas(std::move(theta));
}

void EventKernelParams::set_lambdas(std::vector<double> lambda, double floor) {
  require(lambda.size() == window_.size() * num_decays_, ErrorKind::kArgument,
          "lambda table must have M_u x M_v entries");
  for (double& l : lambda) {
    if (floor > 0.0) l = std::max(l, floor);
    require(l > 0.0 && std::isfinite(l), ErrorKind::kValidation,
            "decay rates must be positive and finite");
  }
  lambda_ = std::move(lambda);
}

void EventKernelParams::set_thetas(std::vector<Matrix> theta) {
  require(theta.size() == window_.size() * num_decays_, ErrorKind::kArgument,
          "theta table must have M_u x M_v blocks");
  for (const auto& b : theta) {
    require(b.rows() == theta.front().rows() && b.cols() == theta.front().cols(),
            ErrorKind::kArgument, "theta blocks must share one Q x P shape");
  }
  in_channels_ = theta.front().rows();
  out_channels_ = theta.front().cols();
  theta_ = std::move(theta);
}

EventEdgeSet build_event_edges(const EventStream& input, const EventStream& output,
                               const SpatialWindow& window, double tau,
                               std::optional<double> crop_window) {
  window.validate();
  require(tau > 0.0, ErrorKind::kArgument, "time scale must be positive");
  require(!crop_window || *crop_window >= 0.0, ErrorKind::kArgument,
          "crop window must be non-negative");
  const GridShape in_grid = input.grid();
  require(output.grid() == window.output_grid(in_grid), ErrorKind::kArgument,
          "output grid does not match the strided input grid");

  // Input events per pixel, in stream (= time) order.
  std::vector<std::vector<std::size_t>> by_pixel(in_grid.pixels());
  for (std::size_t j = 0; j < input.size(); ++j) {
    by_pixel[in_grid.linear(input[j].x, input[j].y)].push_back(j);
  }

  EventEdgeSet edges;
  edges.num_out = output.size();
  edges.num_in = input.size();
  edges.crop_window = crop_window;
  struct Candidate {
    std::size_t j;
    std::size_t u;
  };
  std::vector<Candidate> row;
  for (std::size_t i = 0; i < output.size(); ++i) {
    const Event& out = output[i];
    row.clear();
    for (std::int32_t dy = 0; dy < window.height; ++dy) {
      for (std::int32_t dx = 0; dx < window.width; ++dx) {
        const std::int32_t px = out.x * window.stride + dx - window.anchor_x();
        const std::int32_t py = out.y * window.stride + dy - window.anchor_y();
        if (!in_grid.contains(px, py)) continue;
        const auto& list = by_pixel[in_grid.linear(px, py)];
        const std::size_t u = static_cast<std::size_t>(dy * window.width + dx);
        // Causal: t_j <= t_i. Lists are time-sorted, so take a prefix.
        auto end = std::upper_bound(list.begin(), list.end(), out.t,
                                    [&](double t, std::size_t j) { return t < input[j].t; });
        for (auto it = list.begin(); it != end; ++it) {
          if (crop_window && (out.t - input[*it].t) / tau > *crop_window) continue;
          row.push_back({*it, u});
        }
      }
    }
    std::sort(row.begin(), row.end(),
              [](const Candidate& a, const Candidate& b) { return a.j < b.j; });
    for (const auto& c : row) {
      edges.in_index.push_back(c.j);
      edges.offset.push_back(c.u);
      edges.dt.push_back((out.t - input[c.j].t) / tau);
    }
    edges.row_splits.push_back(edges.in_index.size());
  }
  return edges;
}

namespace {

void check_event_shapes(const EventEdgeSet& edges, const Matrix& features,
                        const EventKernelParams& params) {
  require(features.rows() == edges.num_in, ErrorKind::kArgument,
          "feature rows do not match the input event count");
  require(features.cols() == params.in_channels(), ErrorKind::kArgument,
          "feature channels do not match kernel input channels");
  for (std::size_t u : edges.offset) {
    require(u < params.num_offsets(), ErrorKind::kArgument,
            "edge offset exceeds the kernel window");
  }
}

}  // namespace

Matrix event_conv_forward(const EventEdgeSet& edges, const Matrix& features,
                          const EventKernelParams& params) {
  check_event_shapes(edges, features, params);
  const std::size_t q = params.in_channels();
  const std::size_t p = params.out_channels();
  const std::size_t num_decays = params.num_decays();
  const std::size_t terms = params.num_terms();
  Matrix out(edges.num_out, p);
  // Per output row: acc[uv] = sum over edges with offset u of exp(-l dt) f_j.
  Matrix acc(terms, q);
  std::vector<bool> touched(terms);
  for (std::size_t i = 0; i < edges.num_out; ++i) {
    acc.fill(0.0);
    std::fill(touched.begin(), touched.end(), false);
    for (std::size_t e = edges.row_splits[i]; e < edges.row_splits[i + 1]; ++e) {
      const auto f = features.row(edges.in_index[e]);
      for (std::size_t v = 0; v < num_decays; ++v) {
        const std::size_t uv = edges.offset[e] * num_decays + v;
        const double c = std::exp(-params.lambdas()[uv] * edges.dt[e]);
        auto dst = acc.row(uv);
        for (std::size_t a = 0; a < q; ++a) dst[a] += c * f[a];
        touched[uv] = true;
      }
    }
    auto dst = out.row(i);
    for (std::size_t uv = 0; uv < terms; ++uv) {
      if (!touched[uv]) continue;
      const Matrix& theta = params.thetas()[uv];
      const auto z = acc.row(uv);
      for (std::size_t a = 0; a < q; ++a) {
        const auto th = theta.row(a);
        for (std::size_t b = 0; b < p; ++b) dst[b] += z[a] * th[b];
      }
    }
  }
  return out;
}

EventConvGradients event_conv_backward(const EventEdgeSet& edges, const Matrix& features,
                                       const EventKernelParams& params,
                                       const Matrix& grad_out) {
  check_event_shapes(edges, features, params);
  const std::size_t q = params.in_channels();
  const std::size_t p = params.out_channels();
  const std::size_t num_decays = params.num_decays();
  const std::size_t terms = params.num_terms();
  require(grad_out.rows() == edges.num_out && grad_out.cols() == p, ErrorKind::kArgument,
          "output gradient shape does not match");

  EventConvGradients grads{Matrix(edges.num_in, q), std::vector<Matrix>(terms, Matrix(q, p)),
                           std::vector<double>(terms, 0.0)};
  // projected[uv] = theta_uv dF'_i^T, a Q-vector per term.
  Matrix projected(terms, q);
  for (std::size_t i = 0; i < edges.num_out; ++i) {
    const auto d = grad_out.row(i);
    for (std::size_t uv = 0; uv < terms; ++uv) {
      const Matrix& theta = params.thetas()[uv];
      auto dst = projected.row(uv);
      for (std::size_t a = 0; a < q; ++a) {
        const auto th = theta.row(a);
        double s = 0.0;
        for (std::size_t b = 0; b < p; ++b) s += th[b] * d[b];
        dst[a] = s;
      }
    }
    for (std::size_t e = edges.row_splits[i]; e < edges.row_splits[i + 1]; ++e) {
      const std::size_t j = edges.in_index[e];
      const auto f = features.row(j);
      auto df = grads.features.row(j);
      for (std::size_t v = 0; v < num_decays; ++v) {
        const std::size_t uv = edges.offset[e] * num_decays + v;
        const double c = std::exp(-params.lambdas()[uv] * edges.dt[e]);
        const auto g = projected.row(uv);
        double contraction = 0.0;
        for (std::size_t a = 0; a < q; ++a) {
          df[a] += c * g[a];
          contraction += f[a] * g[a];
        }
        grads.lambda[uv] += -edges.dt[e] * c * contraction;
        Matrix& dtheta = grads.theta[uv];
        for (std::size_t a = 0; a < q; ++a) {
          const double s = c * f[a];
          auto row = dtheta.row(a);
          for (std::size_t b = 0; b < p; ++b) row[b] += s * d[b];
        }
      }
    }
  }
  return grads;
}

NeighborhoodTensor induced_neighborhood_tensor(const EventEdgeSet& edges,
                                               const EventKernelParams& params) {
  const std::size_t num_decays = params.num_decays();
  const std::size_t terms = params.num_terms();
  std::vector<double> values(edges.num_edges() * terms, 0.0);
  for (std::size_t e = 0; e < edges.num_edges(); ++e) {
    for (std::size_t v = 0; v < num_decays; ++v) {
      const std::size_t uv = edges.offset[e] * num_decays + v;
      values[e * terms + uv] = std::exp(-params.lambdas()[uv] * edges.dt[e]);
    }
  }
  // Edge "vectors" are the scaled time gaps.
  Neighborhood structure(edges.num_out, edges.num_in, 1, edges.row_splits, edges.in_index,
                         edges.dt, std::nullopt);
  return NeighborhoodTensor(std::move(structure), terms, std::move(values), false);
}

KernelParams induced_kernel_params(const EventKernelParams& params) {
  return KernelParams(params.thetas());
}

}  // namespace cdconv
