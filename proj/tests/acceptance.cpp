// Acceptance suite: one verdict line per criterion, exit status 1 if any fail.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <string>

#include "cdconv/bench.hpp"
#include "cdconv/conv.hpp"
#include "cdconv/events.hpp"
#include "cdconv/sampling.hpp"
#include "cdconv/streaming.hpp"
#include "oracle.hpp"

using namespace cdconv;

namespace {

struct Verdict {
  bool passed = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// Normwise relative error, falling back to absolute when the reference is 0.
double rel(const std::vector<double>& got, const std::vector<double>& want) {
  return oracle::rel_err(Matrix(1, got.size(), got), Matrix(1, want.size(), want));
}

std::vector<Matrix> random_blocks(Rng& rng, std::size_t n, std::size_t q, std::size_t p) {
  std::vector<Matrix> out;
  for (std::size_t k = 0; k < n; ++k) out.push_back(oracle::random_matrix(rng, q, p));
  return out;
}

double half_sq(const Matrix& m) {
  double s = 0.0;
  for (double v : m.values()) s += 0.5 * v * v;
  return s;
}

// Central differences of `loss` over every entry of `x`.
std::vector<double> numeric_grad(std::vector<double> x,
                                 const std::function<double(const std::vector<double>&)>& loss) {
  constexpr double h = 1e-4;
  std::vector<double> g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double keep = x[k];
    x[k] = keep + h;
    const double up = loss(x);
    x[k] = keep - h;
    const double down = loss(x);
    x[k] = keep;
    g[k] = (up - down) / (2 * h);
  }
  return g;
}

std::vector<double> flat(const std::vector<Matrix>& blocks) {
  std::vector<double> out;
  for (const auto& b : blocks) out.insert(out.end(), b.values().begin(), b.values().end());
  return out;
}

std::vector<Matrix> unflat(const std::vector<double>& v, std::size_t n, std::size_t q,
                           std::size_t p) {
  std::vector<Matrix> out;
  for (std::size_t k = 0; k < n; ++k)
    out.emplace_back(q, p, std::vector<double>(v.begin() + k * q * p, v.begin() + (k + 1) * q * p));
  return out;
}

// 1. Generic conv against the all-pairs sum.
Verdict oracle_equivalence() {
  Rng rng(101);
  const auto t0 = Clock::now();
  double worst = 0.0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    const std::size_t dim = 2 + rng.below(2);
    const auto k = static_cast<std::uint32_t>(rng.below(3));
    const std::size_t s = 1 + rng.below(64), s_out = 1 + rng.below(32);
    const std::size_t q = 1 + rng.below(8), p = 1 + rng.below(8);
    const double r = rng.uniform(0.2, 0.7);
    const bool weighted = t % 2 == 1;
    const PointCloud src = oracle::random_cloud(rng, s, dim);
    const PointCloud qry = oracle::random_cloud(rng, s_out, dim);
    const BasisSet basis = monomial_basis(dim, k);
    const Matrix f = oracle::random_matrix(rng, s, q);
    const auto theta = random_blocks(rng, basis.size(), q, p);
    const NeighborhoodTensor nt = build_neighborhood_tensor(ball_search(src, qry, r), basis, weighted);
    const Matrix want = oracle::conv_direct(src, qry, r, basis.exponents(), f, theta, weighted);
    for (Ordering o : {Ordering::kLeftToRight, Ordering::kRightToLeft})
      worst = std::max(worst, oracle::rel_err(conv_forward(nt, f, KernelParams(theta), o), want));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-12 && secs < 30.0,
          std::to_string(trials) + " instances, both orderings, max rel err " + fmt("%.2e", worst) +
              fmt(" (%.1f s)", secs)};
}

// 2. Finite-difference gradient checks.
Verdict gradients() {
  Rng rng(202);
  const auto t0 = Clock::now();
  double worst_conv = 0.0, worst_event = 0.0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    const std::size_t dim = 2 + rng.below(2);
    const auto k = static_cast<std::uint32_t>(rng.below(3));
    const std::size_t s = 4 + rng.below(20), s_out = 2 + rng.below(10);
    const std::size_t q = 1 + rng.below(4), p = 1 + rng.below(4);
    const PointCloud src = oracle::random_cloud(rng, s, dim);
    const PointCloud qry = oracle::random_cloud(rng, s_out, dim);
    const BasisSet basis = monomial_basis(dim, k);
    const NeighborhoodTensor nt =
        build_neighborhood_tensor(ball_search(src, qry, 0.6), basis, t % 2 == 1);
    const Matrix f = oracle::random_matrix(rng, s, q);
    const auto theta = random_blocks(rng, basis.size(), q, p);
    const std::size_t m = basis.size();
    const Matrix out = conv_forward(nt, f, KernelParams(theta), Ordering::kLeftToRight);
    const ConvGradients g = conv_backward(nt, f, KernelParams(theta), out);

    const auto fd_f = numeric_grad(f.storage(), [&](const std::vector<double>& x) {
      return half_sq(conv_forward(nt, Matrix(s, q, x), KernelParams(theta), Ordering::kLeftToRight));
    });
    const auto fd_t = numeric_grad(flat(theta), [&](const std::vector<double>& x) {
      return half_sq(conv_forward(nt, f, KernelParams(unflat(x, m, q, p)), Ordering::kRightToLeft));
    });
    worst_conv = std::max({worst_conv, rel(g.features.storage(), fd_f), rel(g.params.flatten(), fd_t)});
  }
  for (int t = 0; t < trials; ++t) {
    const SpatialWindow w{1 + 2 * static_cast<std::int32_t>(rng.below(2)),
                          1 + 2 * static_cast<std::int32_t>(rng.below(2)),
                          1 + static_cast<std::int32_t>(rng.below(2))};
    const std::size_t mv = 1 + rng.below(2);
    const std::size_t q = 1 + rng.below(3), p = 1 + rng.below(3);
    const GridShape grid{6, 6};
    const EventStream in = oracle::random_events(rng, grid, 40, 500.0);
    const EventStream out = oracle::random_events(rng, w.output_grid(grid), 10, 500.0);
    std::vector<double> lambda(w.size() * mv);
    for (double& l : lambda) l = rng.uniform(0.2, 2.0);
    const auto theta = random_blocks(rng, lambda.size(), q, p);
    const double tau = 100.0;
    const EventEdgeSet edges = build_event_edges(in, out, w, tau, std::nullopt);
    const Matrix f = oracle::random_matrix(rng, in.size(), q);
    const auto fwd = [&](const Matrix& feat, const std::vector<double>& lam,
                         const std::vector<Matrix>& th) {
      return event_conv_forward(edges, feat, EventKernelParams(w, mv, tau, lam, th));
    };
    const Matrix y = fwd(f, lambda, theta);
    const EventConvGradients g =
        event_conv_backward(edges, f, EventKernelParams(w, mv, tau, lambda, theta), y);
    const auto fd_f = numeric_grad(f.storage(), [&](const std::vector<double>& x) {
      return half_sq(fwd(Matrix(in.size(), q, x), lambda, theta));
    });
    const auto fd_t = numeric_grad(flat(theta), [&](const std::vector<double>& x) {
      return half_sq(fwd(f, lambda, unflat(x, lambda.size(), q, p)));
    });
    const auto fd_l = numeric_grad(lambda, [&](const std::vector<double>& x) {
      return half_sq(fwd(f, x, theta));
    });
    worst_event = std::max({worst_event, rel(g.features.storage(), fd_f), rel(flat(g.theta), fd_t),
                            rel(g.lambda, fd_l)});
  }
  const double secs = seconds_since(t0);
  return {worst_conv <= 1e-5 && worst_event <= 1e-5 && secs < 60.0,
          std::to_string(trials) + "+" + std::to_string(trials) + " instances, max rel err conv " +
              fmt("%.2e", worst_conv) + ", event (incl. lambda) " + fmt("%.2e", worst_event) +
              fmt(" (%.1f s)", secs)};
}

// 3. Streaming EMA path against the batch path.
Verdict dual_equivalence() {
  Rng rng(303);
  const auto t0 = Clock::now();
  double worst = 0.0;
  const int trials = 20;
  for (int t = 0; t < trials; ++t) {
    const SpatialWindow w{3, 3, t % 2 == 0 ? 1 : 2};
    std::vector<double> lambda(w.size() * 2);
    for (double& l : lambda) l = rng.uniform(0.1, 3.0);
    const EventKernelParams params(w, 2, 1000.0, lambda, random_blocks(rng, lambda.size(), 4, 8));
    const EventStream in = oracle::random_events(rng, {32, 32}, 1000, 20000.0);
    const EventStream out = oracle::random_events(rng, w.output_grid({32, 32}), 200, 20000.0);
    const Matrix f = oracle::random_matrix(rng, 1000, 4);
    worst = std::max(worst, dual_equivalence_check(in, f, out, params));
  }
  // Single pixel, inputs at t = 0, 1, output at t = 2, lambda = ln 2.
  const EventStream in({1, 1}, {{0.0, 0, 0, 1}, {1.0, 0, 0, 1}});
  const EventStream out({1, 1}, {{2.0, 0, 0, 0}});
  const EventKernelParams params({1, 1, 1}, 1, 1.0, {std::log(2.0)}, {Matrix(1, 1, 1.0)});
  const Matrix ones(2, 1, 1.0);
  const double batch = event_conv_forward(build_event_edges(in, out, params.window(), 1.0,
                                                            std::nullopt),
                                          ones, params)(0, 0);
  const double stream = streaming_conv(in, ones, out, params)(0, 0);
  const double analytic_err = std::max(std::abs(batch - 0.75), std::abs(stream - 0.75));
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && analytic_err <= 1e-15 && secs < 30.0,
          std::to_string(trials) + " trials, max rel err " + fmt("%.2e", worst) +
              "; single pixel batch " + fmt("%.17g", batch) + " stream " + fmt("%.17g", stream) +
              fmt(" (%.1f s)", secs)};
}

// 4. Sampling guarantees by brute force.
Verdict sampling() {
  Rng rng(404);
  const auto t0 = Clock::now();
  std::size_t violations = 0;
  const int clouds = 50;
  for (int t = 0; t < clouds; ++t) {
    const std::size_t dim = 1 + rng.below(3);
    const PointCloud c = oracle::random_cloud(rng, 50 + rng.below(250), dim);
    const double r = rng.uniform(0.05, 0.4);
    const auto sel = rejection_sample(c, r).indices;
    for (std::size_t a = 0; a < sel.size(); ++a)
      for (std::size_t b = a + 1; b < sel.size(); ++b)
        if (oracle::dist(c, sel[a], c, sel[b]) < r) ++violations;
    for (std::size_t j = 0; j < c.size(); ++j) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t s : sel) best = std::min(best, oracle::dist(c, j, c, s));
      if (best > r) ++violations;
    }
    const std::size_t count = std::min(c.size(), sel.size() + rng.below(c.size() - sel.size() + 1));
    const auto combined = approx_ifp_with_rejection(c, count, r).indices;
    if (combined.size() != count ||
        !std::equal(sel.begin(), sel.end(), combined.begin()))
      ++violations;
    const std::size_t n_ifp = 1 + rng.below(c.size());
    const auto exact = ifp_sample(c, n_ifp).indices;
    if (exact != oracle::greedy_farthest(c, n_ifp)) ++violations;
    if (approx_ifp_sample(c, n_ifp, ball_search(c, c, 10.0)).indices != exact) ++violations;
  }
  const double secs = seconds_since(t0);
  return {violations == 0 && secs < 30.0,
          std::to_string(clouds) + " clouds, " + std::to_string(violations) +
              " violations (separation, coverage, prefix, exact ifp)" + fmt(" (%.1f s)", secs)};
}

// 5. Instrumented multiply-adds and the ordering choice.
Verdict ordering() {
  Rng rng(505);
  std::size_t mismatches = 0, wrong_pick = 0;
  std::size_t tuples = 0;
  const auto check = [&](std::size_t s, std::size_t s_out, std::size_t q, std::size_t p,
                         std::uint32_t k, std::size_t nbrs) {
    const PointCloud src = oracle::random_cloud(rng, s, 2);
    const PointCloud qry = oracle::random_cloud(rng, s_out, 2);
    const BasisSet basis = monomial_basis(2, k);
    const NeighborhoodTensor nt =
        build_neighborhood_tensor(knn_search(src, qry, std::min(nbrs, s)), basis, false);
    const Matrix f = oracle::random_matrix(rng, s, q);
    const KernelParams theta(random_blocks(rng, basis.size(), q, p));
    OpCounter l2r, r2l;
    conv_forward(nt, f, theta, Ordering::kLeftToRight, &l2r);
    conv_forward(nt, f, theta, Ordering::kRightToLeft, &r2l);
    const std::uint64_t m = basis.size(), e = nt.num_edges();
    if (l2r.multiply_adds != m * q * (e + s_out * p)) ++mismatches;
    if (r2l.multiply_adds != m * p * (e + s * q)) ++mismatches;
    const Ordering pick = choose_ordering({s, s_out, q, p, m, e});
    const std::uint64_t chosen = pick == Ordering::kLeftToRight ? l2r.multiply_adds : r2l.multiply_adds;
    if (chosen > std::min(l2r.multiply_adds, r2l.multiply_adds)) ++wrong_pick;
    ++tuples;
    return pick;
  };
  for (int t = 0; t < 100; ++t)
    check(1 + rng.below(200), 1 + rng.below(200), 1 + rng.below(16), 1 + rng.below(16),
          static_cast<std::uint32_t>(rng.below(3)), 1 + rng.below(12));
  // Qualitative regimes: down-sample, up-sample, in-place.
  const bool down = check(200, 50, 4, 16, 1, 8) == Ordering::kLeftToRight;
  const bool up = check(50, 200, 16, 4, 1, 8) == Ordering::kRightToLeft;
  check(100, 100, 8, 8, 1, 8);
  const bool ok = mismatches == 0 && wrong_pick == 0 && down && up;
  return {ok, std::to_string(tuples) + " shapes, " + std::to_string(mismatches) +
                  " count mismatches, " + std::to_string(wrong_pick) + " suboptimal picks, " +
                  "down-sample " + (down ? "l2r" : "r2l?") + ", up-sample " + (up ? "r2l" : "l2r?")};
}

// 6. Weighted conv is continuous at the sphere and invariant to duplication.
Verdict weighted_kernel() {
  Rng rng(606);
  double boundary = 0.0, density = 0.0;
  const double r = 0.25;
  const auto dyadic = [&](std::size_t n, std::size_t dim) {
    std::vector<double> c(n * dim);
    for (double& x : c) x = static_cast<double>(rng.below(65)) / 64.0;
    return PointCloud(dim, std::move(c));
  };
  for (int t = 0; t < 50; ++t) {
    const std::size_t dim = 2 + rng.below(2);
    const BasisSet basis = monomial_basis(dim, static_cast<std::uint32_t>(rng.below(3)));
    const PointCloud src = dyadic(40, dim);
    const PointCloud qry = dyadic(8, dim);
    const Matrix f = oracle::random_matrix(rng, 40, 3);
    const KernelParams theta(random_blocks(rng, basis.size(), 3, 2));
    const auto run = [&](const PointCloud& s, const Matrix& feats) {
      return conv_forward(build_neighborhood_tensor(ball_search(s, qry, r), basis, true), feats,
                          theta, Ordering::kLeftToRight);
    };
    const Matrix base = run(src, f);

    // New input exactly r away from output i along one axis.
    const std::size_t i = rng.below(qry.size());
    std::vector<double> coords = src.coords();
    std::vector<double> extra(qry.point(i).begin(), qry.point(i).end());
    extra[rng.below(dim)] += r;
    coords.insert(coords.end(), extra.begin(), extra.end());
    Matrix f_plus(41, 3);
    std::copy(f.values().begin(), f.values().end(), f_plus.values().begin());
    for (std::size_t a = 0; a < 3; ++a) f_plus(40, a) = rng.uniform(-5, 5);
    const PointCloud grown(dim, coords);
    const Matrix plus = run(grown, f_plus);
    for (std::size_t o = 0; o < qry.size(); ++o) {
      if (oracle::dist(qry, o, grown, 40) < r) continue;  // genuinely inside another ball
      for (std::size_t b = 0; b < 2; ++b) boundary = std::max(boundary, std::abs(plus(o, b) - base(o, b)));
    }

    std::vector<double> twice = src.coords();
    twice.insert(twice.end(), src.coords().begin(), src.coords().end());
    const Matrix doubled = run(PointCloud(dim, twice), vstack(std::vector<Matrix>{f, f}));
    density = std::max(density, max_abs_diff(doubled, base));
  }
  return {boundary <= 1e-12 && density <= 1e-9,
          "50 instances, max change at the sphere " + fmt("%.2e", boundary) +
              ", under duplication " + fmt("%.2e", density)};
}

// 7. A->B and B->A tensors are transposes up to monomial parity.
Verdict symmetry() {
  Rng rng(707);
  std::size_t bad = 0, edges = 0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t dim = 1 + rng.below(3);
    const BasisSet basis = monomial_basis(dim, static_cast<std::uint32_t>(rng.below(4)));
    const PointCloud a = oracle::random_cloud(rng, 10 + rng.below(60), dim);
    const PointCloud b = oracle::random_cloud(rng, 10 + rng.below(60), dim);
    const double r = rng.uniform(0.1, 0.5);
    const NeighborhoodTensor ab = build_neighborhood_tensor(ball_search(a, b, r), basis, false);
    const NeighborhoodTensor ba = build_neighborhood_tensor(ball_search(b, a, r), basis, false);
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> fwd;
    for (std::size_t e = 0; e < ab.num_edges(); ++e)
      fwd[{ab.structure().out_index()[e], ab.structure().in_index()[e]}] = e;
    if (fwd.size() != ba.num_edges()) ++bad;
    for (std::size_t e = 0; e < ba.num_edges(); ++e) {
      auto it = fwd.find({ba.structure().in_index()[e], ba.structure().out_index()[e]});
      if (it == fwd.end()) {
        ++bad;
        continue;
      }
      ++edges;
      for (std::size_t m = 0; m < basis.size(); ++m) {
        const double sign = basis.degree(m) % 2 ? -1.0 : 1.0;
        if (ba.value(e, m) != sign * ab.value(it->second, m)) ++bad;
      }
    }
  }
  return {bad == 0, "50 cloud pairs, " + std::to_string(edges) + " edges, " + std::to_string(bad) +
                        " mismatches"};
}

// 8. LIF against the hand trace and a reference trace.
Verdict lif() {
  const EventStream two({1, 1}, {{0.0, 0, 0, 1}, {0.1, 0, 0, 1}});
  const EventStream fired = lif_subsample(two, {1.0, 1.2, 0.0, {1, 1, 1}});
  const bool hand = fired.size() == 1 && fired[0].t == 0.1;
  Rng rng(808);
  std::size_t mismatched = 0, total = 0;
  for (int t = 0; t < 30; ++t) {
    const SpatialWindow w{1 + 2 * static_cast<std::int32_t>(rng.below(3)),
                          1 + 2 * static_cast<std::int32_t>(rng.below(3)),
                          1 + static_cast<std::int32_t>(rng.below(3))};
    const LIFConfig cfg{rng.uniform(50.0, 2000.0), rng.uniform(0.3, 2.0), rng.uniform(0.0, 0.2), w};
    const EventStream in = oracle::random_events(rng, {32, 32}, 2000, 10000.0);
    const EventStream out = lif_subsample(in, cfg);
    const auto want = oracle::lif_trace(in, cfg);
    total += want.size();
    if (out.size() != want.size()) {
      ++mismatched;
      continue;
    }
    for (std::size_t k = 0; k < out.size(); ++k)
      if (out[k].t != std::get<0>(want[k]) || out[k].x != std::get<1>(want[k]) ||
          out[k].y != std::get<2>(want[k]))
        ++mismatched;
  }
  return {hand && mismatched == 0,
          std::string("two-event fixture ") + (hand ? "fires once at t=0.1" : "WRONG") + "; 30 streams, " +
              std::to_string(total) + " reference events, " + std::to_string(mismatched) + " mismatches"};
}

// 9. Benchmark configuration.
Verdict bench_shape() {
  const BenchConfig cfg;
  const BenchReport r = run_bench(cfg);
  const std::uint64_t e = 8ull * 4096 * 9;
  const bool shape = cfg.num_in == 4096 && cfg.num_out == 4096 && cfg.in_channels == 64 &&
                     cfg.out_channels == 64 && cfg.num_basis == 4 && cfg.neighbors == 9 &&
                     cfg.batch == 8 && r.num_edges == e;
  const std::uint64_t l2r = 4ull * 64 * (e + 8ull * 4096 * 64);
  const bool madds = r.left_to_right_madds == l2r && r.counted_forward_madds == l2r;
  const double total_s = (r.forward_ms + r.backward_ms) / 1000.0;
  std::string detail = "M=4 Q=P=64 S=S'=4096 k=9 batch=8, " + std::to_string(r.num_edges) +
                       " edges, forward " + fmt("%.0f ms", r.forward_ms) + ", backward " +
                       fmt("%.0f ms", r.backward_ms);
  if (total_s >= 10.0) detail += " (soft 10 s bound exceeded)";
  return {shape && madds && r.runs == 1, detail};
}

}  // namespace

int main() {
  const std::pair<const char*, Verdict (*)()> criteria[] = {
      {"conv oracle equivalence", oracle_equivalence},
      {"gradient correctness", gradients},
      {"dual implementation equivalence", dual_equivalence},
      {"sampling guarantees", sampling},
      {"evaluation ordering cost", ordering},
      {"weighted kernel continuity and density", weighted_kernel},
      {"neighborhood symmetry", symmetry},
      {"LIF fidelity", lif},
      {"benchmark shape", bench_shape},
  };
  int failed = 0;
  int n = 0;
  for (const auto& [name, fn] : criteria) {
    ++n;
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    std::printf("[%s] %d %s: %s\n", v.passed ? "PASS" : "FAIL", n, name, v.detail.c_str());
    std::fflush(stdout);
    if (!v.passed) ++failed;
  }
  std::printf("%d/%d criteria passed\n", n - failed, n);
  return failed == 0 ? 0 : 1;
}
