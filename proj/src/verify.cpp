// Copyright Contributors to the cdconv project
// SPDX-License-Identifier: Apache-2.0
#include "cdconv/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "cdconv/conv.hpp"
#include "cdconv/error.hpp"
#include "cdconv/events.hpp"
#include "cdconv/geometry.hpp"
#include "cdconv/kernel.hpp"
#include "cdconv/random.hpp"
#include "cdconv/sampling.hpp"
#include "cdconv/streaming.hpp"

namespace cdconv {

namespace {

constexpr double kTiny = std::numeric_limits<double>::min();

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
}

PointCloud random_cloud(Rng& rng, std::size_t n, std::size_t dim) {
  std::vector<double> coords(n * dim);
  for (double& c : coords) c = rng.uniform();
  return PointCloud(dim, std::move(coords));
}

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double lo = -1.0,
                     double hi = 1.0) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(lo, hi);
  return m;
}

double normwise(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0;
  double scale = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    diff = std::max(diff, std::abs(a[k] - b[k]));
    scale = std::max({scale, std::abs(a[k]), std::abs(b[k])});
  }
  return diff == 0.0 ? 0.0 : diff / std::max(scale, kTiny);
}

// ---------------------------------------------------------------------------
// oracle: all-pairs evaluation of f'_i = sum_m sum_{|dx|<=r} w p_m(dx) f_j theta_m

Matrix all_pairs_conv(const PointCloud& in, const PointCloud& out, double radius,
                      const BasisSet& basis, bool weighted, const Matrix& f,
                      const KernelParams& theta) {
  const std::size_t p = theta.out_channels();
  Matrix result(out.size(), p);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double total_w = 0.0;
    std::vector<std::pair<std::size_t, double>> members;
    for (std::size_t j = 0; j < in.size(); ++j) {
      double d2 = 0.0;
      for (std::size_t d = 0; d < in.dim(); ++d) {
        const double diff = out.point(i)[d] - in.point(j)[d];
        d2 += diff * diff;
      }
      const double dist = std::sqrt(d2);
      if (dist > radius) continue;
      const double w = weighted ? 1.0 - dist / radius : 1.0;
      members.emplace_back(j, w);
      total_w += w;
    }
    for (const auto& [j, w] : members) {
      const double scale = weighted ? (total_w > 0.0 ? w / total_w : 0.0) : 1.0;
      for (std::size_t m = 0; m < basis.size(); ++m) {
        double pm = 1.0;
        for (std::size_t d = 0; d < in.dim(); ++d) {
          pm *= std::pow(out.point(i)[d] - in.point(j)[d], basis.exponents()[m][d]);
        }
        for (std::size_t a = 0; a < theta.in_channels(); ++a) {
          for (std::size_t b = 0; b < p; ++b) {
            result(i, b) += scale * pm * f(j, a) * theta.block(m)(a, b);
          }
        }
      }
    }
  }
  return result;
}

double oracle_trial(Rng& rng) {
  const std::size_t dim = pick(rng, 2, 3);
  const std::size_t s_in = pick(rng, 1, 64);
  const std::size_t s_out = pick(rng, 1, 32);
  const std::size_t q = pick(rng, 1, 8);
  const std::size_t p = pick(rng, 1, 8);
  const auto order = static_cast<std::uint32_t>(pick(rng, 0, 2));
  const bool weighted = rng.below(2) == 1;
  const double radius = rng.uniform(0.2, 0.6);
  const PointCloud in = random_cloud(rng, s_in, dim);
  const PointCloud out = random_cloud(rng, s_out, dim);
  const BasisSet basis = monomial_basis(dim, order);
  const Matrix f = random_matrix(rng, s_in, q);
  std::vector<double> theta_values(basis.size() * q * p);
  for (double& v : theta_values) v = rng.uniform(-1.0, 1.0);
  const KernelParams theta(basis.size(), q, p, std::move(theta_values));

  const NeighborhoodTensor nt =
      build_neighborhood_tensor(ball_search(in, out, radius), basis, weighted);
  const Matrix expected = all_pairs_conv(in, out, radius, basis, weighted, f, theta);
  const Matrix l2r = conv_forward(nt, f, theta, Ordering::kLeftToRight);
  const Matrix r2l = conv_forward(nt, f, theta, Ordering::kRightToLeft);
  return std::max(normwise(l2r.values(), expected.values()),
                  normwise(r2l.values(), expected.values()));
}

// ---------------------------------------------------------------------------
// gradcheck

constexpr double kStep = 1e-4;

double half_sq(const Matrix& m) {
  double acc = 0.0;
  for (double v : m.values()) acc += 0.5 * v * v;
  return acc;
}

// Central differences of loss() w.r.t. every entry of `values`.
std::vector<double> central_diff(std::span<double> values, const std::function<double()>& loss) {
  std::vector<double> grad(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double saved = values[k];
    values[k] = saved + kStep;
    const double up = loss();
    values[k] = saved - kStep;
    const double down = loss();
    values[k] = saved;
    grad[k] = (up - down) / (2.0 * kStep);
  }
  return grad;
}

double conv_grad_trial(Rng& rng) {
  const std::size_t dim = pick(rng, 2, 3);
  const std::size_t s_in = pick(rng, 3, 12);
  const std::size_t s_out = pick(rng, 2, 8);
  const std::size_t q = pick(rng, 1, 3);
  const std::size_t p = pick(rng, 1, 3);
  const auto order = static_cast<std::uint32_t>(pick(rng, 0, 2));
  const bool weighted = rng.below(2) == 1;
  const PointCloud in = random_cloud(rng, s_in, dim);
  const PointCloud out = random_cloud(rng, s_out, dim);
  const NeighborhoodTensor nt =
      build_neighborhood_tensor(ball_search(in, out, 0.7), monomial_basis(dim, order), weighted);
  Matrix f = random_matrix(rng, s_in, q);
  std::vector<double> theta_values(nt.num_basis() * q * p);
  for (double& v : theta_values) v = rng.uniform(-1.0, 1.0);

  auto loss = [&] {
    const KernelParams theta(nt.num_basis(), q, p, theta_values);
    return half_sq(conv_forward(nt, f, theta, Ordering::kLeftToRight));
  };
  const KernelParams theta(nt.num_basis(), q, p, theta_values);
  const Matrix out_f = conv_forward(nt, f, theta, Ordering::kLeftToRight);
  const ConvGradients g = conv_backward(nt, f, theta, out_f);

  const auto fd_f = central_diff(f.values(), loss);
  const auto fd_theta = central_diff(theta_values, loss);
  return std::max(normwise(g.features.values(), fd_f), normwise(g.params.flatten(), fd_theta));
}

EventStream random_events(Rng& rng, GridShape grid, std::size_t n, double t_max) {
  std::vector<double> times(n);
  for (double& t : times) t = std::floor(rng.uniform(0.0, t_max));
  std::sort(times.begin(), times.end());
  std::vector<Event> events(n);
  for (std::size_t k = 0; k < n; ++k) {
    events[k] = {times[k], static_cast<std::int32_t>(rng.below(grid.width)),
                 static_cast<std::int32_t>(rng.below(grid.height)),
                 static_cast<std::uint8_t>(rng.below(2))};
  }
  return EventStream(grid, std::move(events));
}

EventKernelParams random_event_params(Rng& rng, SpatialWindow window, std::size_t num_decays,
                                      double tau, std::size_t q, std::size_t p) {
  const std::size_t terms = window.size() * num_decays;
  std::vector<double> lambda(terms);
  for (double& l : lambda) l = rng.uniform(0.2, 2.0);
  std::vector<Matrix> theta;
  for (std::size_t k = 0; k < terms; ++k) theta.push_back(random_matrix(rng, q, p));
  return EventKernelParams(window, num_decays, tau, std::move(lambda), std::move(theta));
}

double event_grad_trial(Rng& rng) {
  const GridShape grid{4, 4};
  const SpatialWindow window{3, 3, static_cast<std::int32_t>(pick(rng, 1, 2))};
  const std::size_t q = pick(rng, 1, 3);
  const std::size_t p = pick(rng, 1, 3);
  const double tau = 1000.0;
  EventKernelParams params = random_event_params(rng, window, 2, tau, q, p);
  const EventStream input = random_events(rng, grid, 16, 3000.0);
  const EventStream output = random_events(rng, window.output_grid(grid), 6, 3000.0);
  const EventEdgeSet edges = build_event_edges(input, output, window, tau, std::nullopt);
  Matrix f = random_matrix(rng, input.size(), q);

  std::vector<double> lambda = params.lambdas();
  std::vector<double> theta;
  for (const auto& b : params.thetas()) theta.insert(theta.end(), b.values().begin(), b.values().end());
  auto rebuild = [&] {
    std::vector<Matrix> blocks;
    for (std::size_t k = 0; k < params.num_terms(); ++k) {
      blocks.emplace_back(q, p, std::vector<double>(theta.begin() + static_cast<std::ptrdiff_t>(k * q * p),
                                                    theta.begin() + static_cast<std::ptrdiff_t>((k + 1) * q * p)));
    }
    EventKernelParams copy = params;
    copy.set_lambdas(lambda, 0.0);
    copy.set_thetas(std::move(blocks));
    return copy;
  };
  auto loss = [&] { return half_sq(event_conv_forward(edges, f, rebuild())); };

  const Matrix out_f = event_conv_forward(edges, f, params);
  const EventConvGradients g = event_conv_backward(edges, f, params, out_f);
  std::vector<double> g_theta;
  for (const auto& b : g.theta) g_theta.insert(g_theta.end(), b.values().begin(), b.values().end());

  const auto fd_f = central_diff(f.values(), loss);
  const auto fd_theta = central_diff(theta, loss);
  const auto fd_lambda = central_diff(lambda, loss);
  return std::max({normwise(g.features.values(), fd_f), normwise(g_theta, fd_theta),
                   normwise(g.lambda, fd_lambda)});
}

double gradcheck_trial(Rng& rng) {
  Rng conv_rng = rng.split();
  Rng event_rng = rng.split();
  return std::max(conv_grad_trial(conv_rng), event_grad_trial(event_rng));
}

// ---------------------------------------------------------------------------
// dual

double dual_trial(Rng& rng, std::size_t trial, double perturb) {
  const GridShape grid{32, 32};
  const SpatialWindow window{3, 3, trial % 2 == 0 ? 1 : 2};
  const double tau = 1000.0;
  const EventKernelParams params = random_event_params(rng, window, 2, tau, 4, 8);
  const EventStream input = random_events(rng, grid, 1000, 20000.0);
  const EventStream output = random_events(rng, window.output_grid(grid), 200, 20000.0);
  const Matrix f = random_matrix(rng, input.size(), 4, 0.0, 1.0);
  const Matrix streamed = streaming_conv(input, f, output, params);
  Matrix batched = event_conv_forward(
      build_event_edges(input, output, window, tau, std::nullopt), f, params);
  if (perturb != 0.0 && batched.size() > 0) batched.values()[0] += perturb;
  double worst = 0.0;
  for (std::size_t i = 0; i < batched.rows(); ++i) {
    worst = std::max(worst, normwise(streamed.row(i), batched.row(i)));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// sampling: counts violated properties

double sampling_trial(Rng& rng) {
  const std::size_t dim = pick(rng, 2, 3);
  const std::size_t n = pick(rng, 20, 200);
  const double radius = rng.uniform(0.05, 0.4);
  const PointCloud cloud = random_cloud(rng, n, dim);
  std::size_t violations = 0;

  const SampleResult rej = rejection_sample(cloud, radius);
  for (std::size_t a = 0; a < rej.indices.size(); ++a) {
    for (std::size_t b = a + 1; b < rej.indices.size(); ++b) {
      if (distance(cloud.point(rej.indices[a]), cloud.point(rej.indices[b])) < radius) ++violations;
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t s : rej.indices) nearest = std::min(nearest, distance(cloud.point(j), cloud.point(s)));
    if (nearest > radius) ++violations;
  }

  const std::size_t count = std::min(n, rej.indices.size() + pick(rng, 0, n - rej.indices.size()));
  const SampleResult combined = approx_ifp_with_rejection(cloud, count, radius);
  if (combined.indices.size() != count ||
      !std::equal(rej.indices.begin(), rej.indices.end(), combined.indices.begin())) {
    ++violations;
  }

  const std::size_t ifp_count = pick(rng, 1, n);
  const Neighborhood all_pairs = brute_force_ball_search(cloud, cloud, 10.0);
  if (approx_ifp_sample(cloud, ifp_count, all_pairs).indices !=
      ifp_sample(cloud, ifp_count).indices) {
    ++violations;
  }
  return static_cast<double>(violations);
}

}  // namespace

const std::vector<std::string>& verify_suite_names() {
  static const std::vector<std::string> names{"dual", "gradcheck", "sampling", "oracle"};
  return names;
}

SuiteReport run_verify_suite(std::string_view suite, const VerifyOptions& options) {
  SuiteReport report;
  report.suite = std::string(suite);
  std::function<double(Rng&, std::size_t)> trial;
  if (suite == "dual") {
    report.tolerance = 1e-9;
    trial = [&](Rng& rng, std::size_t t) { return dual_trial(rng, t, options.perturb); };
  } else if (suite == "gradcheck") {
    report.tolerance = 1e-5;
    trial = [&](Rng& rng, std::size_t) { return gradcheck_trial(rng) + options.perturb; };
  } else if (suite == "sampling") {
    report.tolerance = 0.0;
    trial = [&](Rng& rng, std::size_t) { return sampling_trial(rng) + options.perturb; };
  } else if (suite == "oracle") {
    report.tolerance = 1e-12;
    trial = [&](Rng& rng, std::size_t) { return oracle_trial(rng) + options.perturb; };
  } else {
    fail(ErrorKind::kArgument, "unknown verification suite '" + std::string(suite) + "'");
  }
  Rng root(options.seed);
  for (std::size_t t = 0; t < options.trials; ++t) {
    Rng rng = root.split();
    TrialReport r;
    r.trial = t;
    r.error = trial(rng, t);
    r.passed = std::isfinite(r.error) && r.error <= report.tolerance;
    report.max_error = std::max(report.max_error, r.error);
    report.passed = report.passed && r.passed;
    report.trials.push_back(std::move(r));
  }
  return report;
}

}  // namespace cdconv
