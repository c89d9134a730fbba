// Copyright Contributors to the cdconv project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cdconv/conv.hpp"
#include "cdconv/events.hpp"
#include "cdconv/geometry.hpp"
#include "cdconv/matrix.hpp"
#include "cdconv/sampling.hpp"

namespace cdconv::io {

namespace fs = std::filesystem;

// Binary tensor file: "CDCT", u32 rank, u32 dims[rank], then product(dims)
// little-endian doubles in row-major order. Rank is at most 4.
struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<double> values;
};

inline constexpr char kTensorMagic[4] = {'C', 'D', 'C', 'T'};
inline constexpr std::size_t kMaxRank = 4;

void write_tensor(const fs::path& path, const Tensor& tensor);
Tensor read_tensor(const fs::path& path);
bool is_tensor_file(const fs::path& path);

enum class TableFormat { kCsv, kTensor };

// Rows of comma-separated decimals; '#' lines and blank lines are skipped.
// Values are written with 17 significant digits.
Matrix read_matrix(const fs::path& path);
void write_matrix(const fs::path& path, const Matrix& m, TableFormat format);

PointCloud read_point_cloud(const fs::path& path);
void write_point_cloud(const fs::path& path, const PointCloud& cloud, TableFormat format);

// "%H,W" header, then "t,x,y,p" lines with integer microsecond times.
EventStream read_event_stream(const fs::path& path);
void write_event_stream(const fs::path& path, const EventStream& stream);

// "%H,W" header, then "t,x,y,f_1,...,f_P" per output event.
void write_event_features(const fs::path& path, const EventStream& stream,
                          const Matrix& features);

// Line-oriented key=value text; '#' starts a comment line.
using Manifest = std::map<std::string, std::string>;
Manifest read_manifest(const fs::path& path);
void write_manifest(const fs::path& path, const Manifest& manifest);

// Parameters are a manifest plus a tensor payload stored next to it
// (file name under the "payload" key).
void write_kernel_params(const fs::path& manifest, const KernelParams& params);
KernelParams read_kernel_params(const fs::path& manifest);
// Accepts either a manifest or a bare rank-3 (M, Q, P) tensor file.
KernelParams load_kernel_params(const fs::path& path);

void write_featureless_params(const fs::path& manifest, const FeaturelessParams& params);
FeaturelessParams read_featureless_params(const fs::path& manifest);

void write_event_params(const fs::path& manifest, const EventKernelParams& params);
EventKernelParams read_event_params(const fs::path& manifest);

// One manifest describing LIF subsampling followed by one event convolution
// sharing its window and stride.
struct EventSimConfig {
  LIFConfig lif;
  EventKernelParams conv;
  std::optional<double> crop_window;
};
void write_event_sim_config(const fs::path& manifest, const EventSimConfig& config);
EventSimConfig read_event_sim_config(const fs::path& manifest);

void write_indices(const fs::path& path, const std::vector<std::size_t>& indices);
std::vector<std::size_t> read_indices(const fs::path& path);
void write_column(const fs::path& path, const std::vector<double>& values);

std::string format_double(double v);

}  // namespace cdconv::io
