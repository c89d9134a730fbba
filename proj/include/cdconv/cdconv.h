/* Copyright Contributors to the cdconv project
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the cdconv library. Objects are opaque handles created by
 * *_create / *_read / operation functions and released with *_destroy.
 * Every fallible call returns a cdc_status; on failure, cdc_last_error()
 * describes the problem for the calling thread until its next failing call.
 * Handles may be shared across threads for reading; cdc_stream is
 * single-writer.
 */
#ifndef CDCONV_CDCONV_H_
#define CDCONV_CDCONV_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CDC_API __declspec(dllexport)
#else
#define CDC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cdc_status {
  CDC_OK = 0,
  CDC_ERR_ARGUMENT = 1,
  CDC_ERR_STATE = 2,
  CDC_ERR_PARSE = 3,
  CDC_ERR_FORMAT = 4,
  CDC_ERR_ORDERING = 5,
  CDC_ERR_RANGE = 6,
  CDC_ERR_SORTEDNESS = 7,
  CDC_ERR_VALIDATION = 8,
  CDC_ERR_IO = 9,
  CDC_ERR_INTERNAL = 10
} cdc_status;

typedef enum cdc_ordering {
  CDC_LEFT_TO_RIGHT = 0,
  CDC_RIGHT_TO_LEFT = 1
} cdc_ordering;

typedef enum cdc_table_format {
  CDC_FORMAT_CSV = 0,
  CDC_FORMAT_TENSOR = 1
} cdc_table_format;

typedef enum cdc_sampler {
  CDC_SAMPLE_IFP = 0,
  CDC_SAMPLE_APPROX_IFP = 1,
  CDC_SAMPLE_REJECTION = 2,
  CDC_SAMPLE_APPROX_IFP_REJECTION = 3
} cdc_sampler;

typedef struct cdc_cloud cdc_cloud;
typedef struct cdc_matrix cdc_matrix;
typedef struct cdc_neighborhood cdc_neighborhood;
typedef struct cdc_tensor cdc_tensor;
typedef struct cdc_kernel cdc_kernel;
typedef struct cdc_sample cdc_sample;
typedef struct cdc_events cdc_events;
typedef struct cdc_event_sim cdc_event_sim;
typedef struct cdc_stream cdc_stream;

CDC_API const char* cdc_last_error(void);
CDC_API const char* cdc_status_name(cdc_status status);
CDC_API const char* cdc_version(void);

/* Point clouds: n points of dimension dim, row-major. */
CDC_API cdc_status cdc_cloud_create(size_t dim, const double* coords, size_t n, cdc_cloud** out);
CDC_API cdc_status cdc_cloud_read(const char* path, cdc_cloud** out);
CDC_API cdc_status cdc_cloud_write(const cdc_cloud* cloud, const char* path, cdc_table_format format);
CDC_API size_t cdc_cloud_size(const cdc_cloud* cloud);
CDC_API size_t cdc_cloud_dim(const cdc_cloud* cloud);
CDC_API const double* cdc_cloud_coords(const cdc_cloud* cloud);
CDC_API void cdc_cloud_destroy(cdc_cloud* cloud);

/* Dense row-major matrices (features). */
CDC_API cdc_status cdc_matrix_create(size_t rows, size_t cols, const double* data, cdc_matrix** out);
CDC_API cdc_status cdc_matrix_read(const char* path, cdc_matrix** out);
CDC_API cdc_status cdc_matrix_write(const cdc_matrix* m, const char* path, cdc_table_format format);
CDC_API size_t cdc_matrix_rows(const cdc_matrix* m);
CDC_API size_t cdc_matrix_cols(const cdc_matrix* m);
CDC_API const double* cdc_matrix_data(const cdc_matrix* m);
CDC_API void cdc_matrix_destroy(cdc_matrix* m);

/* Neighbor searches. Edges are ordered by (out index, in index). */
CDC_API cdc_status cdc_ball_search(const cdc_cloud* source, const cdc_cloud* queries, double radius,
                                   cdc_neighborhood** out);
CDC_API cdc_status cdc_brute_force_ball_search(const cdc_cloud* source, const cdc_cloud* queries,
                                               double radius, cdc_neighborhood** out);
CDC_API cdc_status cdc_knn_search(const cdc_cloud* source, const cdc_cloud* queries, size_t k,
                                  cdc_neighborhood** out);
CDC_API size_t cdc_neighborhood_num_edges(const cdc_neighborhood* nb);
/* Copies edge endpoints; either array may be NULL. Each needs num_edges slots. */
CDC_API cdc_status cdc_neighborhood_edges(const cdc_neighborhood* nb, size_t* out_index, size_t* in_index);
CDC_API void cdc_neighborhood_destroy(cdc_neighborhood* nb);

/* Sampling. radius is ignored by IFP; count is ignored by rejection. */
CDC_API cdc_status cdc_cloud_sample(const cdc_cloud* cloud, cdc_sampler method, size_t count, double radius,
                              cdc_sample** out);
CDC_API size_t cdc_sample_size(const cdc_sample* s);
CDC_API const size_t* cdc_sample_indices(const cdc_sample* s);
/* One entry per input point; +inf where never updated. */
CDC_API const double* cdc_sample_min_dist(const cdc_sample* s);
CDC_API size_t cdc_sample_num_points(const cdc_sample* s);
CDC_API void cdc_sample_destroy(cdc_sample* s);

/* Monomial basis tensors and point convolution. */
CDC_API size_t cdc_basis_size(size_t dim, uint32_t max_order);
CDC_API cdc_status cdc_tensor_build(const cdc_neighborhood* nb, uint32_t max_order, int weighted,
                                    cdc_tensor** out);
CDC_API size_t cdc_tensor_num_basis(const cdc_tensor* t);
CDC_API size_t cdc_tensor_num_edges(const cdc_tensor* t);
CDC_API const double* cdc_tensor_values(const cdc_tensor* t);
CDC_API void cdc_tensor_destroy(cdc_tensor* t);

/* Kernel parameters: num_basis blocks of in_channels x out_channels. */
CDC_API cdc_status cdc_kernel_create(size_t num_basis, size_t in_channels, size_t out_channels,
                                     const double* values, cdc_kernel** out);
/* Reads a parameter manifest or a bare rank-3 tensor file. */
CDC_API cdc_status cdc_kernel_read(const char* path, cdc_kernel** out);
CDC_API cdc_status cdc_kernel_write(const cdc_kernel* k, const char* manifest_path);
CDC_API size_t cdc_kernel_num_basis(const cdc_kernel* k);
CDC_API size_t cdc_kernel_in_channels(const cdc_kernel* k);
CDC_API size_t cdc_kernel_out_channels(const cdc_kernel* k);
CDC_API void cdc_kernel_destroy(cdc_kernel* k);

CDC_API cdc_ordering cdc_choose_ordering(size_t num_in, size_t num_out, size_t in_channels,
                                         size_t out_channels, size_t num_basis, size_t num_edges);
CDC_API const char* cdc_ordering_name(cdc_ordering ordering);
/* madds may be NULL; otherwise receives the multiply-add count. */
CDC_API cdc_status cdc_conv_forward(const cdc_tensor* t, const cdc_matrix* features, const cdc_kernel* k,
                                    cdc_ordering ordering, cdc_matrix** out, uint64_t* madds);
CDC_API cdc_status cdc_conv_backward(const cdc_tensor* t, const cdc_matrix* features, const cdc_kernel* k,
                                     const cdc_matrix* grad_out, cdc_matrix** grad_features,
                                     cdc_kernel** grad_kernel);
/* weights is num_basis x out_channels. */
CDC_API cdc_status cdc_featureless_forward(const cdc_tensor* t, const cdc_matrix* weights, cdc_matrix** out);

/* Event streams. */
CDC_API cdc_status cdc_events_read(const char* path, cdc_events** out);
CDC_API cdc_status cdc_events_write(const cdc_events* ev, const char* path);
CDC_API size_t cdc_events_size(const cdc_events* ev);
CDC_API void cdc_events_grid(const cdc_events* ev, int32_t* height, int32_t* width);
CDC_API void cdc_events_destroy(cdc_events* ev);
/* Writes "%H,W" then "t,x,y,f..." lines. */
CDC_API cdc_status cdc_event_features_write(const cdc_events* ev, const cdc_matrix* features, const char* path);
CDC_API cdc_status cdc_polarity_features(const cdc_events* ev, cdc_matrix** out);

/* LIF subsampling followed by one event convolution, as described by an
 * event_sim manifest. */
CDC_API cdc_status cdc_event_sim_read(const char* manifest_path, cdc_event_sim** out);
CDC_API void cdc_event_sim_destroy(cdc_event_sim* sim);
CDC_API cdc_status cdc_lif_subsample(const cdc_events* input, const cdc_event_sim* sim, cdc_events** out);
/* Batch path over (optionally cropped) causal edges. */
CDC_API cdc_status cdc_event_conv_batch(const cdc_events* input, const cdc_matrix* features,
                                        const cdc_events* output, const cdc_event_sim* sim,
                                        int use_crop, cdc_matrix** out);
/* Per-pixel EMA path. */
CDC_API cdc_status cdc_event_conv_streaming(const cdc_events* input, const cdc_matrix* features,
                                            const cdc_events* output, const cdc_event_sim* sim,
                                            cdc_matrix** out);
CDC_API cdc_status cdc_dual_equivalence(const cdc_events* input, const cdc_matrix* features,
                                        const cdc_events* output, const cdc_event_sim* sim,
                                        double* max_rel_error);

/* Incremental streaming state. */
CDC_API cdc_status cdc_stream_create(int32_t height, int32_t width, const cdc_event_sim* sim, cdc_stream** out);
CDC_API cdc_status cdc_stream_on_input(cdc_stream* s, double t, int32_t x, int32_t y,
                                       const double* features, size_t num_features);
CDC_API cdc_status cdc_stream_query(const cdc_stream* s, double t, int32_t x, int32_t y,
                                    double* out, size_t num_out);
CDC_API size_t cdc_stream_state_size(const cdc_stream* s);
CDC_API void cdc_stream_destroy(cdc_stream* s);

/* Verification suites: "dual", "gradcheck", "sampling", "oracle".
 * on_trial is called once per trial (may be NULL). */
typedef void (*cdc_trial_callback)(void* user, size_t trial, double error, int passed);
CDC_API cdc_status cdc_verify(const char* suite, uint64_t seed, size_t trials, double perturb,
                              cdc_trial_callback on_trial, void* user, double* tolerance,
                              double* max_error, int* passed);

typedef struct cdc_bench_config {
  size_t num_in;
  size_t num_out;
  size_t in_channels;
  size_t out_channels;
  size_t num_basis;
  size_t neighbors;
  size_t batch;
  size_t reps;
  uint64_t seed;
} cdc_bench_config;

typedef struct cdc_bench_report {
  size_t num_edges;
  cdc_ordering ordering;
  uint64_t left_to_right_madds;
  uint64_t right_to_left_madds;
  uint64_t counted_forward_madds;
  size_t runs;
  double forward_ms;
  double backward_ms;
  double setup_ms;
} cdc_bench_report;

CDC_API void cdc_bench_default_config(cdc_bench_config* config);
CDC_API cdc_status cdc_bench(const cdc_bench_config* config, cdc_bench_report* report);

#ifdef __cplusplus
}  /* extern "C" */
#endif

#endif  /* CDCONV_CDCONV_H_ */
