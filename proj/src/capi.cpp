// Copyright Contributors to the cdconv project
// SPDX-License-Identifier: Apache-2.0
#include "cdconv/cdconv.h"

#include <exception>
#include <memory>
#include <string>

#include "cdconv/bench.hpp"
#include "cdconv/conv.hpp"
#include "cdconv/error.hpp"
#include "cdconv/events.hpp"
#include "cdconv/geometry.hpp"
#include "cdconv/io.hpp"
#include "cdconv/kernel.hpp"
#include "cdconv/sampling.hpp"
#include "cdconv/streaming.hpp"
#include "cdconv/verify.hpp"

struct cdc_cloud {
  cdconv::PointCloud rep;
};
struct cdc_matrix {
  cdconv::Matrix rep;
};
struct cdc_neighborhood {
  cdconv::Neighborhood rep;
};
struct cdc_tensor {
  cdconv::NeighborhoodTensor rep;
};
struct cdc_kernel {
  cdconv::KernelParams rep;
};
struct cdc_sample {
  cdconv::SampleResult rep;
};
struct cdc_events {
  cdconv::EventStream rep;
};
struct cdc_event_sim {
  cdconv::io::EventSimConfig rep;
};
struct cdc_stream {
  cdconv::StreamState rep;
};

namespace {

thread_local std::string g_last_error;

cdc_status to_status(cdconv::ErrorKind kind) {
  using cdconv::ErrorKind;
  switch (kind) {
    case ErrorKind::kArgument: return CDC_ERR_ARGUMENT;
    case ErrorKind::kState: return CDC_ERR_STATE;
    case ErrorKind::kParse: return CDC_ERR_PARSE;
    case ErrorKind::kFormat: return CDC_ERR_FORMAT;
    case ErrorKind::kOrdering: return CDC_ERR_ORDERING;
    case ErrorKind::kRange: return CDC_ERR_RANGE;
    case ErrorKind::kSortedness: return CDC_ERR_SORTEDNESS;
    case ErrorKind::kValidation: return CDC_ERR_VALIDATION;
    case ErrorKind::kIo: return CDC_ERR_IO;
  }
  return CDC_ERR_INTERNAL;
}

template <typename F>
cdc_status guarded(F&& body) {
  try {
    body();
    return CDC_OK;
  } catch (const cdconv::Error& e) {
    g_last_error = e.what();
    return to_status(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return CDC_ERR_INTERNAL;
}

void need(const void* p, const char* what) {
  cdconv::require(p != nullptr, cdconv::ErrorKind::kArgument, std::string(what) + " is null");
}

template <typename Handle, typename Value>
void emit(Handle** out, Value&& value) {
  need(out, "output handle");
  *out = new Handle{std::forward<Value>(value)};
}

cdconv::Ordering to_ordering(cdc_ordering o) {
  return o == CDC_RIGHT_TO_LEFT ? cdconv::Ordering::kRightToLeft : cdconv::Ordering::kLeftToRight;
}

cdc_ordering from_ordering(cdconv::Ordering o) {
  return o == cdconv::Ordering::kRightToLeft ? CDC_RIGHT_TO_LEFT : CDC_LEFT_TO_RIGHT;
}

cdconv::io::TableFormat to_format(cdc_table_format f) {
  return f == CDC_FORMAT_TENSOR ? cdconv::io::TableFormat::kTensor : cdconv::io::TableFormat::kCsv;
}

}  // namespace

extern "C" {

const char* cdc_last_error(void) { return g_last_error.c_str(); }

const char* cdc_status_name(cdc_status status) {
  switch (status) {
    case CDC_OK: return "ok";
    case CDC_ERR_ARGUMENT: return "argument error";
    case CDC_ERR_STATE: return "state error";
    case CDC_ERR_PARSE: return "parse error";
    case CDC_ERR_FORMAT: return "format error";
    case CDC_ERR_ORDERING: return "ordering error";
    case CDC_ERR_RANGE: return "range error";
    case CDC_ERR_SORTEDNESS: return "sortedness error";
    case CDC_ERR_VALIDATION: return "validation error";
    case CDC_ERR_IO: return "io error";
    case CDC_ERR_INTERNAL: return "internal error";
  }
  return "unknown";
}

const char* cdc_version(void) { return "0.1.0"; }

// -- clouds ---------------------------------------------------------------

cdc_status cdc_cloud_create(size_t dim, const double* coords, size_t n, cdc_cloud** out) {
  return guarded([&] {
    if (n > 0) need(coords, "coords");
    emit(out, cdconv::PointCloud(dim, std::vector<double>(coords, coords + n * dim)));
  });
}

cdc_status cdc_cloud_read(const char* path, cdc_cloud** out) {
  return guarded([&] {
    need(path, "path");
    emit(out, cdconv::io::read_point_cloud(path));
  });
}

cdc_status cdc_cloud_write(const cdc_cloud* cloud, const char* path, cdc_table_format format) {
  return guarded([&] {
    need(cloud, "cloud");
    need(path, "path");
    cdconv::io::write_point_cloud(path, cloud->rep, to_format(format));
  });
}

size_t cdc_cloud_size(const cdc_cloud* cloud) { return cloud ? cloud->rep.size() : 0; }
size_t cdc_cloud_dim(const cdc_cloud* cloud) { return cloud ? cloud->rep.dim() : 0; }
const double* cdc_cloud_coords(const cdc_cloud* cloud) {
  return cloud ? cloud->rep.coords().data() : nullptr;
}
void cdc_cloud_destroy(cdc_cloud* cloud) { delete cloud; }

// -- matrices -------------------------------------------------------------

cdc_status cdc_matrix_create(size_t rows, size_t cols, const double* data, cdc_matrix** out) {
  return guarded([&] {
    std::vector<double> values(rows * cols, 0.0);
    if (data) values.assign(data, data + rows * cols);
    emit(out, cdconv::Matrix(rows, cols, std::move(values)));
  });
}

cdc_status cdc_matrix_read(const char* path, cdc_matrix** out) {
  return guarded([&] {
    need(path, "path");
    emit(out, cdconv::io::read_matrix(path));
  });
}

cdc_status cdc_matrix_write(const cdc_matrix* m, const char* path, cdc_table_format format) {
  return guarded([&] {
    need(m, "matrix");
    need(path, "path");
    cdconv::io::write_matrix(path, m->rep, to_format(format));
  });
}

size_t cdc_matrix_rows(const cdc_matrix* m) { return m ? m->rep.rows() : 0; }
size_t cdc_matrix_cols(const cdc_matrix* m) { return m ? m->rep.cols() : 0; }
const double* cdc_matrix_data(const cdc_matrix* m) {
  return m ? m->rep.storage().data() : nullptr;
}
void cdc_matrix_destroy(cdc_matrix* m) { delete m; }

// -- neighborhoods --------------------------------------------------------

cdc_status cdc_ball_search(const cdc_cloud* source, const cdc_cloud* queries, double radius,
                           cdc_neighborhood** out) {
  return guarded([&] {
    need(source, "source");
    need(queries, "queries");
    emit(out, cdconv::ball_search(source->rep, queries->rep, radius));
  });
}

cdc_status cdc_brute_force_ball_search(const cdc_cloud* source, const cdc_cloud* queries,
                                       double radius, cdc_neighborhood** out) {
  return guarded([&] {
    need(source, "source");
    need(queries, "queries");
    emit(out, cdconv::brute_force_ball_search(source->rep, queries->rep, radius));
  });
}

cdc_status cdc_knn_search(const cdc_cloud* source, const cdc_cloud* queries, size_t k,
                          cdc_neighborhood** out) {
  return guarded([&] {
    need(source, "source");
    need(queries, "queries");
    emit(out, cdconv::knn_search(source->rep, queries->rep, k));
  });
}

size_t cdc_neighborhood_num_edges(const cdc_neighborhood* nb) {
  return nb ? nb->rep.num_edges() : 0;
}

cdc_status cdc_neighborhood_edges(const cdc_neighborhood* nb, size_t* out_index, size_t* in_index) {
  return guarded([&] {
    need(nb, "neighborhood");
    const auto& r = nb->rep;
    if (out_index) std::copy(r.out_index().begin(), r.out_index().end(), out_index);
    if (in_index) std::copy(r.in_index().begin(), r.in_index().end(), in_index);
  });
}

void cdc_neighborhood_destroy(cdc_neighborhood* nb) { delete nb; }

// -- sampling -------------------------------------------------------------

cdc_status cdc_cloud_sample(const cdc_cloud* cloud, cdc_sampler method, size_t count, double radius,
                      cdc_sample** out) {
  return guarded([&] {
    need(cloud, "cloud");
    const auto& c = cloud->rep;
    switch (method) {
      case CDC_SAMPLE_IFP:
        emit(out, cdconv::ifp_sample(c, count));
        return;
      case CDC_SAMPLE_APPROX_IFP:
        emit(out, cdconv::approx_ifp_sample(c, count, cdconv::ball_search(c, c, radius)));
        return;
      case CDC_SAMPLE_REJECTION:
        cdconv::require(!c.empty(), cdconv::ErrorKind::kArgument,
                        "rejection sampling needs a non-empty cloud");
        emit(out, cdconv::rejection_sample(c, radius));
        return;
      case CDC_SAMPLE_APPROX_IFP_REJECTION:
        emit(out, cdconv::approx_ifp_with_rejection(c, count, radius));
        return;
    }
    cdconv::fail(cdconv::ErrorKind::kArgument, "unknown sampling method");
  });
}

size_t cdc_sample_size(const cdc_sample* s) { return s ? s->rep.indices.size() : 0; }
const size_t* cdc_sample_indices(const cdc_sample* s) {
  return s ? s->rep.indices.data() : nullptr;
}
const double* cdc_sample_min_dist(const cdc_sample* s) {
  return s ? s->rep.min_dist.data() : nullptr;
}
size_t cdc_sample_num_points(const cdc_sample* s) { return s ? s->rep.min_dist.size() : 0; }
void cdc_sample_destroy(cdc_sample* s) { delete s; }

// -- convolution ----------------------------------------------------------

size_t cdc_basis_size(size_t dim, uint32_t max_order) {
  return cdconv::monomial_count(dim, max_order);
}

cdc_status cdc_tensor_build(const cdc_neighborhood* nb, uint32_t max_order, int weighted,
                            cdc_tensor** out) {
  return guarded([&] {
    need(nb, "neighborhood");
    const auto basis = cdconv::monomial_basis(nb->rep.dim(), max_order);
    emit(out, cdconv::build_neighborhood_tensor(nb->rep, basis, weighted != 0));
  });
}

size_t cdc_tensor_num_basis(const cdc_tensor* t) { return t ? t->rep.num_basis() : 0; }
size_t cdc_tensor_num_edges(const cdc_tensor* t) { return t ? t->rep.num_edges() : 0; }
const double* cdc_tensor_values(const cdc_tensor* t) {
  return t ? t->rep.values().data() : nullptr;
}
void cdc_tensor_destroy(cdc_tensor* t) { delete t; }

cdc_status cdc_kernel_create(size_t num_basis, size_t in_channels, size_t out_channels,
                             const double* values, cdc_kernel** out) {
  return guarded([&] {
    const size_t n = num_basis * in_channels * out_channels;
    if (n > 0) need(values, "values");
    emit(out, cdconv::KernelParams(num_basis, in_channels, out_channels,
                                   std::vector<double>(values, values + n)));
  });
}

cdc_status cdc_kernel_read(const char* path, cdc_kernel** out) {
  return guarded([&] {
    need(path, "path");
    emit(out, cdconv::io::load_kernel_params(path));
  });
}

cdc_status cdc_kernel_write(const cdc_kernel* k, const char* manifest_path) {
  return guarded([&] {
    need(k, "kernel");
    need(manifest_path, "path");
    cdconv::io::write_kernel_params(manifest_path, k->rep);
  });
}

size_t cdc_kernel_num_basis(const cdc_kernel* k) { return k ? k->rep.num_basis() : 0; }
size_t cdc_kernel_in_channels(const cdc_kernel* k) { return k ? k->rep.in_channels() : 0; }
size_t cdc_kernel_out_channels(const cdc_kernel* k) { return k ? k->rep.out_channels() : 0; }
void cdc_kernel_destroy(cdc_kernel* k) { delete k; }

cdc_ordering cdc_choose_ordering(size_t num_in, size_t num_out, size_t in_channels,
                                 size_t out_channels, size_t num_basis, size_t num_edges) {
  return from_ordering(cdconv::choose_ordering(
      {num_in, num_out, in_channels, out_channels, num_basis, num_edges}));
}

const char* cdc_ordering_name(cdc_ordering ordering) {
  return cdconv::ordering_name(to_ordering(ordering));
}

cdc_status cdc_conv_forward(const cdc_tensor* t, const cdc_matrix* features, const cdc_kernel* k,
                            cdc_ordering ordering, cdc_matrix** out, uint64_t* madds) {
  return guarded([&] {
    need(t, "tensor");
    need(features, "features");
    need(k, "kernel");
    cdconv::OpCounter counter;
    emit(out, cdconv::conv_forward(t->rep, features->rep, k->rep, to_ordering(ordering),
                                   madds ? &counter : nullptr));
    if (madds) *madds = counter.multiply_adds;
  });
}

cdc_status cdc_conv_backward(const cdc_tensor* t, const cdc_matrix* features, const cdc_kernel* k,
                             const cdc_matrix* grad_out, cdc_matrix** grad_features,
                             cdc_kernel** grad_kernel) {
  return guarded([&] {
    need(t, "tensor");
    need(features, "features");
    need(k, "kernel");
    need(grad_out, "grad_out");
    need(grad_features, "grad_features");
    need(grad_kernel, "grad_kernel");
    auto g = cdconv::conv_backward(t->rep, features->rep, k->rep, grad_out->rep);
    auto gf = std::make_unique<cdc_matrix>(cdc_matrix{std::move(g.features)});
    *grad_kernel = new cdc_kernel{std::move(g.params)};
    *grad_features = gf.release();
  });
}

cdc_status cdc_featureless_forward(const cdc_tensor* t, const cdc_matrix* weights, cdc_matrix** out) {
  return guarded([&] {
    need(t, "tensor");
    need(weights, "weights");
    emit(out, cdconv::featureless_forward(t->rep, cdconv::FeaturelessParams{weights->rep}));
  });
}

// -- events ---------------------------------------------------------------

cdc_status cdc_events_read(const char* path, cdc_events** out) {
  return guarded([&] {
    need(path, "path");
    emit(out, cdconv::io::read_event_stream(path));
  });
}

cdc_status cdc_events_write(const cdc_events* ev, const char* path) {
  return guarded([&] {
    need(ev, "events");
    need(path, "path");
    cdconv::io::write_event_stream(path, ev->rep);
  });
}

size_t cdc_events_size(const cdc_events* ev) { return ev ? ev->rep.size() : 0; }

void cdc_events_grid(const cdc_events* ev, int32_t* height, int32_t* width) {
  if (!ev) return;
  if (height) *height = ev->rep.grid().height;
  if (width) *width = ev->rep.grid().width;
}

void cdc_events_destroy(cdc_events* ev) { delete ev; }

cdc_status cdc_event_features_write(const cdc_events* ev, const cdc_matrix* features, const char* path) {
  return guarded([&] {
    need(ev, "events");
    need(features, "features");
    need(path, "path");
    cdconv::io::write_event_features(path, ev->rep, features->rep);
  });
}

cdc_status cdc_polarity_features(const cdc_events* ev, cdc_matrix** out) {
  return guarded([&] {
    need(ev, "events");
    emit(out, cdconv::polarity_features(ev->rep));
  });
}

cdc_status cdc_event_sim_read(const char* manifest_path, cdc_event_sim** out) {
  return guarded([&] {
    need(manifest_path, "path");
    emit(out, cdconv::io::read_event_sim_config(manifest_path));
  });
}

void cdc_event_sim_destroy(cdc_event_sim* sim) { delete sim; }

cdc_status cdc_lif_subsample(const cdc_events* input, const cdc_event_sim* sim, cdc_events** out) {
  return guarded([&] {
    need(input, "input");
    need(sim, "config");
    emit(out, cdconv::lif_subsample(input->rep, sim->rep.lif));
  });
}

cdc_status cdc_event_conv_batch(const cdc_events* input, const cdc_matrix* features,
                                const cdc_events* output, const cdc_event_sim* sim, int use_crop,
                                cdc_matrix** out) {
  return guarded([&] {
    need(input, "input");
    need(features, "features");
    need(output, "output");
    need(sim, "config");
    const auto& p = sim->rep.conv;
    const auto edges = cdconv::build_event_edges(input->rep, output->rep, p.window(), p.tau(),
                                                 use_crop ? sim->rep.crop_window : std::nullopt);
    emit(out, cdconv::event_conv_forward(edges, features->rep, p));
  });
}

cdc_status cdc_event_conv_streaming(const cdc_events* input, const cdc_matrix* features,
                                    const cdc_events* output, const cdc_event_sim* sim,
                                    cdc_matrix** out) {
  return guarded([&] {
    need(input, "input");
    need(features, "features");
    need(output, "output");
    need(sim, "config");
    emit(out, cdconv::streaming_conv(input->rep, features->rep, output->rep, sim->rep.conv));
  });
}

cdc_status cdc_dual_equivalence(const cdc_events* input, const cdc_matrix* features,
                                const cdc_events* output, const cdc_event_sim* sim,
                                double* max_rel_error) {
  return guarded([&] {
    need(input, "input");
    need(features, "features");
    need(output, "output");
    need(sim, "config");
    need(max_rel_error, "max_rel_error");
    *max_rel_error =
        cdconv::dual_equivalence_check(input->rep, features->rep, output->rep, sim->rep.conv);
  });
}

cdc_status cdc_stream_create(int32_t height, int32_t width, const cdc_event_sim* sim, cdc_stream** out) {
  return guarded([&] {
    need(sim, "config");
    emit(out, cdconv::stream_init({height, width}, sim->rep.conv));
  });
}

cdc_status cdc_stream_on_input(cdc_stream* s, double t, int32_t x, int32_t y, const double* features,
                               size_t num_features) {
  return guarded([&] {
    need(s, "stream");
    if (num_features > 0) need(features, "features");
    s->rep.on_input(t, x, y, std::span<const double>(features, num_features));
  });
}

cdc_status cdc_stream_query(const cdc_stream* s, double t, int32_t x, int32_t y, double* out,
                            size_t num_out) {
  return guarded([&] {
    need(s, "stream");
    need(out, "out");
    cdconv::require(num_out == s->rep.params().out_channels(), cdconv::ErrorKind::kArgument,
                    "output buffer size does not match the kernel's output channels");
    const auto f = s->rep.query(t, x, y);
    std::copy(f.begin(), f.end(), out);
  });
}

size_t cdc_stream_state_size(const cdc_stream* s) { return s ? s->rep.state_size() : 0; }
void cdc_stream_destroy(cdc_stream* s) { delete s; }

// -- verification and benchmarking ----------------------------------------

cdc_status cdc_verify(const char* suite, uint64_t seed, size_t trials, double perturb,
                      cdc_trial_callback on_trial, void* user, double* tolerance,
                      double* max_error, int* passed) {
  return guarded([&] {
    need(suite, "suite");
    const auto report = cdconv::run_verify_suite(suite, {seed, trials, perturb});
    if (on_trial) {
      for (const auto& t : report.trials) on_trial(user, t.trial, t.error, t.passed ? 1 : 0);
    }
    if (tolerance) *tolerance = report.tolerance;
    if (max_error) *max_error = report.max_error;
    if (passed) *passed = report.passed ? 1 : 0;
  });
}

void cdc_bench_default_config(cdc_bench_config* config) {
  if (!config) return;
  const cdconv::BenchConfig d;
  *config = {d.num_in, d.num_out, d.in_channels, d.out_channels, d.num_basis,
             d.neighbors, d.batch, d.reps, d.seed};
}

cdc_status cdc_bench(const cdc_bench_config* config, cdc_bench_report* report) {
  return guarded([&] {
    need(config, "config");
    need(report, "report");
    const cdconv::BenchConfig c{config->num_in,      config->num_out,   config->in_channels,
                                config->out_channels, config->num_basis, config->neighbors,
                                config->batch,        config->reps,      config->seed};
    const auto r = cdconv::run_bench(c);
    *report = {r.num_edges,        from_ordering(r.ordering), r.left_to_right_madds,
               r.right_to_left_madds, r.counted_forward_madds, r.runs,
               r.forward_ms,       r.backward_ms,             r.setup_ms};
  });
}

}  // extern "C"
