// Copyright Contributors to the cdconv project
// SPDX-License-Identifier: Apache-2.0
//
// cdconv: command-line front end over the C library.
//
// Exit codes: 0 success / verified, 1 verification failed, 2 usage or
// format error.

#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cdconv/cdconv.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitUsage = 2;

// Thrown when a library call fails; carries the message for stderr.
struct LibraryError {
  std::string message;
};

void check(cdc_status status, const char* what) {
  if (status != CDC_OK) {
    throw LibraryError{std::string(what) + ": " + cdc_status_name(status) + ": " +
                       cdc_last_error()};
  }
}

template <typename T, void (*Destroy)(T*)>
struct Deleter {
  void operator()(T* p) const { Destroy(p); }
};

using Cloud = std::unique_ptr<cdc_cloud, Deleter<cdc_cloud, cdc_cloud_destroy>>;
using Mat = std::unique_ptr<cdc_matrix, Deleter<cdc_matrix, cdc_matrix_destroy>>;
using Nbhd = std::unique_ptr<cdc_neighborhood, Deleter<cdc_neighborhood, cdc_neighborhood_destroy>>;
using Tensor = std::unique_ptr<cdc_tensor, Deleter<cdc_tensor, cdc_tensor_destroy>>;
using Kernel = std::unique_ptr<cdc_kernel, Deleter<cdc_kernel, cdc_kernel_destroy>>;
using Sample = std::unique_ptr<cdc_sample, Deleter<cdc_sample, cdc_sample_destroy>>;
using Events = std::unique_ptr<cdc_events, Deleter<cdc_events, cdc_events_destroy>>;
using EventSim = std::unique_ptr<cdc_event_sim, Deleter<cdc_event_sim, cdc_event_sim_destroy>>;


struct UsageError {
  std::string message;
};

// ---------------------------------------------------------------------------

struct SampleArgs {
  std::string input;
  std::string method;
  std::optional<double> radius;
  std::optional<long long> count;
  std::string output;
};

int run_sample(const SampleArgs& a) {
  cdc_sampler method;
  bool needs_count = true;
  bool needs_radius = true;
  if (a.method == "ifp") {
    method = CDC_SAMPLE_IFP;
    needs_radius = false;
  } else if (a.method == "approx-ifp") {
    method = CDC_SAMPLE_APPROX_IFP;
  } else if (a.method == "rejection") {
    method = CDC_SAMPLE_REJECTION;
    needs_count = false;
  } else {
    method = CDC_SAMPLE_APPROX_IFP_REJECTION;
  }
  if (needs_count && (!a.count || *a.count < 1)) {
    throw UsageError{"--count N (N >= 1) is required for method " + a.method};
  }
  if (needs_radius && (!a.radius || !(*a.radius > 0.0))) {
    throw UsageError{"--radius R (R > 0) is required for method " + a.method};
  }

  cdc_cloud* raw_cloud = nullptr;
  check(cdc_cloud_read(a.input.c_str(), &raw_cloud), "reading point cloud");
  Cloud cloud(raw_cloud);
  cdc_sample* raw_sample = nullptr;
  check(cdc_cloud_sample(cloud.get(), method, needs_count ? static_cast<size_t>(*a.count) : 0,
                   a.radius.value_or(0.0), &raw_sample),
        "sampling");
  Sample sample(raw_sample);

  const size_t n = cdc_sample_size(sample.get());
  const size_t* idx = cdc_sample_indices(sample.get());
  // Indices are written one per line.
  {
    std::FILE* f = std::fopen(a.output.c_str(), "w");
    if (!f) throw LibraryError{"cannot open " + a.output + " for writing"};
    for (size_t k = 0; k < n; ++k) std::fprintf(f, "%zu\n", idx[k]);
    std::fclose(f);
  }
  const std::string sidecar = a.output + ".dmin.csv";
  Mat dmin;
  {
    cdc_matrix* raw = nullptr;
    check(cdc_matrix_create(cdc_sample_num_points(sample.get()), 1,
                            cdc_sample_min_dist(sample.get()), &raw),
          "collecting distances");
    dmin.reset(raw);
  }
  check(cdc_matrix_write(dmin.get(), sidecar.c_str(), CDC_FORMAT_CSV), "writing distances");

  std::printf("method: %s\n", a.method.c_str());
  std::printf("input_points: %zu\n", cdc_cloud_size(cloud.get()));
  std::printf("selected: %zu\n", n);
  std::printf("indices: %s\n", a.output.c_str());
  std::printf("min_dist: %s\n", sidecar.c_str());
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ConvArgs {
  std::string cloud_in;
  std::string cloud_out;
  std::string features;
  std::string theta;
  double radius = 0.0;
  unsigned order = 1;
  bool weighted = false;
  std::string ordering = "auto";
  std::string output;
  std::string format = "csv";
};

int run_conv(const ConvArgs& a) {
  cdc_cloud* raw_in = nullptr;
  check(cdc_cloud_read(a.cloud_in.c_str(), &raw_in), "reading input cloud");
  Cloud in(raw_in);
  cdc_cloud* raw_out = nullptr;
  check(cdc_cloud_read(a.cloud_out.c_str(), &raw_out), "reading output cloud");
  Cloud out(raw_out);
  cdc_matrix* raw_f = nullptr;
  check(cdc_matrix_read(a.features.c_str(), &raw_f), "reading features");
  Mat features(raw_f);
  cdc_kernel* raw_k = nullptr;
  check(cdc_kernel_read(a.theta.c_str(), &raw_k), "reading kernel parameters");
  Kernel kernel(raw_k);

  cdc_neighborhood* raw_nb = nullptr;
  check(cdc_ball_search(in.get(), out.get(), a.radius, &raw_nb), "ball search");
  Nbhd nb(raw_nb);
  cdc_tensor* raw_t = nullptr;
  check(cdc_tensor_build(nb.get(), a.order, a.weighted ? 1 : 0, &raw_t), "building basis tensor");
  Tensor tensor(raw_t);

  const size_t edges = cdc_neighborhood_num_edges(nb.get());
  cdc_ordering ordering = CDC_LEFT_TO_RIGHT;
  if (a.ordering == "auto") {
    ordering = cdc_choose_ordering(cdc_cloud_size(in.get()), cdc_cloud_size(out.get()),
                                   cdc_kernel_in_channels(kernel.get()),
                                   cdc_kernel_out_channels(kernel.get()),
                                   cdc_kernel_num_basis(kernel.get()), edges);
  } else if (a.ordering == "r2l") {
    ordering = CDC_RIGHT_TO_LEFT;
  }
  cdc_matrix* raw_res = nullptr;
  uint64_t madds = 0;
  check(cdc_conv_forward(tensor.get(), features.get(), kernel.get(), ordering, &raw_res, &madds),
        "convolution");
  Mat result(raw_res);
  check(cdc_matrix_write(result.get(), a.output.c_str(),
                         a.format == "tensor" ? CDC_FORMAT_TENSOR : CDC_FORMAT_CSV),
        "writing output features");

  std::printf("ordering: %s\n", cdc_ordering_name(ordering));
  std::printf("edges: %zu\n", edges);
  std::printf("basis: %zu\n", cdc_tensor_num_basis(tensor.get()));
  std::printf("multiply_adds: %llu\n", static_cast<unsigned long long>(madds));
  std::printf("output: %zu x %zu\n", cdc_matrix_rows(result.get()), cdc_matrix_cols(result.get()));
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EventSimArgs {
  std::string events;
  std::string config;
  std::string output;
  bool streaming = false;
};

int run_event_sim(const EventSimArgs& a) {
  cdc_events* raw_in = nullptr;
  check(cdc_events_read(a.events.c_str(), &raw_in), "reading events");
  Events input(raw_in);
  cdc_event_sim* raw_sim = nullptr;
  check(cdc_event_sim_read(a.config.c_str(), &raw_sim), "reading configuration");
  EventSim sim(raw_sim);

  cdc_matrix* raw_f = nullptr;
  check(cdc_polarity_features(input.get(), &raw_f), "featurizing polarity");
  Mat features(raw_f);
  cdc_events* raw_out = nullptr;
  check(cdc_lif_subsample(input.get(), sim.get(), &raw_out), "LIF subsampling");
  Events output(raw_out);

  cdc_matrix* raw_res = nullptr;
  if (a.streaming) {
    check(cdc_event_conv_streaming(input.get(), features.get(), output.get(), sim.get(), &raw_res),
          "streaming convolution");
  } else {
    check(cdc_event_conv_batch(input.get(), features.get(), output.get(), sim.get(), 1, &raw_res),
          "batch convolution");
  }
  Mat result(raw_res);
  check(cdc_event_features_write(output.get(), result.get(), a.output.c_str()),
        "writing output events");

  int32_t h = 0, w = 0;
  cdc_events_grid(output.get(), &h, &w);
  std::printf("path: %s\n", a.streaming ? "streaming" : "batch");
  std::printf("input_events: %zu\n", cdc_events_size(input.get()));
  std::printf("output_events: %zu\n", cdc_events_size(output.get()));
  std::printf("output_grid: %dx%d\n", h, w);
  std::printf("output_channels: %zu\n", cdc_matrix_cols(result.get()));
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
  std::string suite;
  unsigned long long seed = 1;
  size_t trials = 20;
  double perturb = 0.0;
};

void print_trial(void*, size_t trial, double error, int passed) {
  std::printf("trial %4zu  max_err %.3e  %s\n", trial, error, passed ? "ok" : "FAIL");
}

int run_verify(const VerifyArgs& a) {
  double tolerance = 0.0;
  double max_error = 0.0;
  int passed = 0;
  const cdc_status st = cdc_verify(a.suite.c_str(), a.seed, a.trials, a.perturb, print_trial,
                                   nullptr, &tolerance, &max_error, &passed);
  if (st == CDC_ERR_ARGUMENT) throw UsageError{cdc_last_error()};
  check(st, "verification");
  std::printf("suite: %s\n", a.suite.c_str());
  std::printf("seed: %llu\n", a.seed);
  std::printf("trials: %zu\n", a.trials);
  std::printf("tolerance: %.3e\n", tolerance);
  std::printf("max_error: %.3e\n", max_error);
  std::printf("status: %s\n", passed ? "pass" : "FAIL");
  return passed ? kExitOk : kExitFailed;
}

// ---------------------------------------------------------------------------

int run_bench(const cdc_bench_config& c) {
  cdc_bench_report r{};
  check(cdc_bench(&c, &r), "benchmark");
  std::printf("num_basis: %zu\n", c.num_basis);
  std::printf("in_channels: %zu\n", c.in_channels);
  std::printf("out_channels: %zu\n", c.out_channels);
  std::printf("points_in: %zu\n", c.num_in);
  std::printf("points_out: %zu\n", c.num_out);
  std::printf("neighbors: %zu\n", c.neighbors);
  std::printf("batch: %zu\n", c.batch);
  std::printf("edges: %zu\n", r.num_edges);
  std::printf("ordering: %s\n", cdc_ordering_name(r.ordering));
  std::printf("madds_left_to_right: %llu\n", static_cast<unsigned long long>(r.left_to_right_madds));
  std::printf("madds_right_to_left: %llu\n", static_cast<unsigned long long>(r.right_to_left_madds));
  if (r.runs == 0) return kExitOk;
  std::printf("madds_counted: %llu\n", static_cast<unsigned long long>(r.counted_forward_madds));
  std::printf("reps: %zu\n", r.runs);
  std::printf("\n%-10s %14s %16s\n", "pass", "median_ms", "multiply_adds");
  std::printf("%-10s %14.3f %16llu\n", "forward", r.forward_ms,
              static_cast<unsigned long long>(r.counted_forward_madds));
  std::printf("%-10s %14.3f %16s\n", "backward", r.backward_ms, "-");
  std::printf("%-10s %14.3f %16s\n", "setup", r.setup_ms, "-");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous-domain sparse convolutions for point clouds and event streams", "cdconv"};
  app.require_subcommand(1);

  SampleArgs sample;
  auto* sample_cmd = app.add_subcommand("sample", "Subsample a point cloud");
  sample_cmd->add_option("--input", sample.input, "Point cloud (CSV or tensor file)")->required();
  sample_cmd->add_option("--method", sample.method, "Sampling algorithm")
      ->required()
      ->check(CLI::IsMember({"ifp", "approx-ifp", "rejection", "approx-ifp-rej"}));
  sample_cmd->add_option("--radius", sample.radius, "Ball radius");
  sample_cmd->add_option("--count", sample.count, "Number of points to select");
  sample_cmd->add_option("--output", sample.output, "Selected indices, one per line")->required();

  ConvArgs conv;
  auto* conv_cmd = app.add_subcommand("conv", "Ball-neighborhood point convolution");
  conv_cmd->add_option("--cloud-in", conv.cloud_in, "Input cloud")->required();
  conv_cmd->add_option("--cloud-out", conv.cloud_out, "Output cloud")->required();
  conv_cmd->add_option("--features", conv.features, "Input features (S x Q)")->required();
  conv_cmd->add_option("--theta", conv.theta, "Kernel manifest or rank-3 tensor file")->required();
  conv_cmd->add_option("--radius", conv.radius, "Ball radius")->required();
  conv_cmd->add_option("--order", conv.order, "Maximum monomial order")->required();
  conv_cmd->add_flag("--weighted", conv.weighted, "Use the radius-weighted kernel");
  conv_cmd->add_option("--ordering", conv.ordering, "Evaluation order")
      ->check(CLI::IsMember({"auto", "l2r", "r2l"}));
  conv_cmd->add_option("--output", conv.output, "Output features (S' x P)")->required();
  conv_cmd->add_option("--format", conv.format, "Output format")
      ->check(CLI::IsMember({"csv", "tensor"}));

  EventSimArgs esim;
  auto* esim_cmd = app.add_subcommand("event-sim", "LIF subsampling then one event convolution");
  esim_cmd->add_option("--events", esim.events, "Event CSV (%H,W header, t,x,y,p lines)")->required();
  esim_cmd->add_option("--config", esim.config, "event_sim manifest")->required();
  esim_cmd->add_option("--output", esim.output, "Output event features")->required();
  esim_cmd->add_flag("--streaming", esim.streaming, "Use the per-pixel EMA path");

  VerifyArgs verify;
  auto* verify_cmd = app.add_subcommand("verify", "Run a seeded property suite");
  verify_cmd->add_option("--suite", verify.suite, "dual | gradcheck | sampling | oracle")->required();
  verify_cmd->add_option("--seed", verify.seed, "PRNG seed");
  verify_cmd->add_option("--trials", verify.trials, "Number of trials");
  // Test hook: adds this amount to every measured error.
  verify_cmd->add_option("--perturb", verify.perturb)->group("");

  cdc_bench_config bench{};
  cdc_bench_default_config(&bench);
  auto* bench_cmd = app.add_subcommand("bench", "Time a batched forward + backward pass");
  bench_cmd->add_option("--s", bench.num_in, "Input points per example");
  bench_cmd->add_option("--s-out", bench.num_out, "Output points per example");
  bench_cmd->add_option("--q", bench.in_channels, "Input channels");
  bench_cmd->add_option("--p", bench.out_channels, "Output channels");
  bench_cmd->add_option("--m", bench.num_basis, "Basis functions");
  bench_cmd->add_option("--k", bench.neighbors, "Neighbors per output point");
  bench_cmd->add_option("--batch", bench.batch, "Examples per batch");
  bench_cmd->add_option("--reps", bench.reps, "Timed repetitions (0: shape only)");
  bench_cmd->add_option("--seed", bench.seed, "PRNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*sample_cmd) return run_sample(sample);
    if (*conv_cmd) return run_conv(conv);
    if (*esim_cmd) return run_event_sim(esim);
    if (*verify_cmd) return run_verify(verify);
    if (*bench_cmd) return run_bench(bench);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.message.c_str());
    return kExitUsage;
  } catch (const LibraryError& e) {
    std::fprintf(stderr, "error: %s\n", e.message.c_str());
    return kExitUsage;
  }
  return kExitUsage;
}
