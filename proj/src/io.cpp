// Copyright Contributors to the cdconv project
// SPDX-License-Identifier: Apache-2.0
#include "cdconv/io.hpp"

#include <bit>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "cdconv/error.hpp"

namespace cdconv::io {

namespace {

std::string where(const fs::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  require(in.good(), ErrorKind::kIo, "cannot open " + path.string() + " for reading");
  return in;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  require(out.good(), ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  return out;
}

void put_u32(std::string& buf, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) buf.push_back(static_cast<char>((v >> (8 * k)) & 0xFFu));
}

void put_f64(std::string& buf, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int k = 0; k < 8; ++k) buf.push_back(static_cast<char>((v >> (8 * k)) & 0xFFu));
}

std::uint64_t get_le(const unsigned char* p, int bytes) {
  std::uint64_t v = 0;
  for (int k = 0; k < bytes; ++k) v |= static_cast<std::uint64_t>(p[k]) << (8 * k);
  return v;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(s);
  while (std::getline(ss, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && errno != ERANGE;
}

bool parse_int(const std::string& s, long long& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  out = std::strtoll(s.c_str(), &end, 10);
  return end == s.c_str() + s.size() && errno != ERANGE;
}

// Reads comma-separated numeric rows, checking they all have equal width.
Matrix read_csv_matrix(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  std::size_t lineno = 0;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto fields = split(t, ',');
    if (rows == 0) cols = fields.size();
    require(fields.size() == cols, ErrorKind::kParse,
            where(path, lineno) + "expected " + std::to_string(cols) + " fields, found " +
                std::to_string(fields.size()));
    for (const auto& f : fields) {
      double v = 0.0;
      require(parse_double(f, v) && std::isfinite(v), ErrorKind::kParse,
              where(path, lineno) + "not a finite number: '" + f + "'");
      values.push_back(v);
    }
    ++rows;
  }
  return Matrix(rows, cols, std::move(values));
}

Matrix tensor_to_matrix(const fs::path& path, Tensor t) {
  require(t.dims.size() == 2, ErrorKind::kFormat,
          path.string() + ": expected a rank-2 tensor, found rank " +
              std::to_string(t.dims.size()));
  return Matrix(t.dims[0], t.dims[1], std::move(t.values));
}

std::string require_key(const Manifest& m, const std::string& key, const fs::path& path) {
  auto it = m.find(key);
  require(it != m.end(), ErrorKind::kFormat, path.string() + ": missing key '" + key + "'");
  return it->second;
}

long long key_int(const Manifest& m, const std::string& key, const fs::path& path) {
  long long v = 0;
  require(parse_int(require_key(m, key, path), v), ErrorKind::kFormat,
          path.string() + ": key '" + key + "' is not an integer");
  return v;
}

double key_double(const Manifest& m, const std::string& key, const fs::path& path) {
  double v = 0.0;
  require(parse_double(require_key(m, key, path), v), ErrorKind::kFormat,
          path.string() + ": key '" + key + "' is not a number");
  return v;
}

std::size_t key_size(const Manifest& m, const std::string& key, const fs::path& path) {
  const long long v = key_int(m, key, path);
  require(v > 0, ErrorKind::kFormat, path.string() + ": key '" + key + "' must be positive");
  return static_cast<std::size_t>(v);
}

void expect_kind(const Manifest& m, const std::string& kind, const fs::path& path) {
  const std::string found = require_key(m, "kind", path);
  require(found == kind, ErrorKind::kFormat,
          path.string() + ": expected kind=" + kind + ", found kind=" + found);
}

fs::path payload_path(const fs::path& manifest) {
  fs::path p = manifest;
  p += ".cdct";
  return p;
}

Tensor read_payload(const Manifest& m, const fs::path& manifest) {
  const fs::path rel = require_key(m, "payload", manifest);
  return read_tensor(manifest.parent_path() / rel);
}

void check_dims(const Tensor& t, const std::vector<std::uint32_t>& expected,
                const fs::path& path) {
  auto show = [](const std::vector<std::uint32_t>& d) {
    std::string s = "(";
    for (std::size_t k = 0; k < d.size(); ++k) s += (k ? "," : "") + std::to_string(d[k]);
    return s + ")";
  };
  require(t.dims == expected, ErrorKind::kFormat,
          path.string() + ": manifest declares shape " + show(expected) +
              " but payload has shape " + show(t.dims));
}

std::vector<Matrix> split_blocks(const Tensor& t) {
  std::vector<Matrix> blocks;
  const std::size_t block = std::size_t{t.dims[1]} * t.dims[2];
  for (std::size_t k = 0; k < t.dims[0]; ++k) {
    blocks.emplace_back(t.dims[1], t.dims[2],
                        std::vector<double>(t.values.begin() + static_cast<std::ptrdiff_t>(k * block),
                                            t.values.begin() + static_cast<std::ptrdiff_t>((k + 1) * block)));
  }
  return blocks;
}

Tensor join_blocks(const std::vector<Matrix>& blocks) {
  Tensor t;
  t.dims = {static_cast<std::uint32_t>(blocks.size()),
            static_cast<std::uint32_t>(blocks.empty() ? 0 : blocks.front().rows()),
            static_cast<std::uint32_t>(blocks.empty() ? 0 : blocks.front().cols())};
  for (const auto& b : blocks) t.values.insert(t.values.end(), b.values().begin(), b.values().end());
  return t;
}

void put_event_kernel(Manifest& m, const EventKernelParams& p) {
  m["window_height"] = std::to_string(p.window().height);
  m["window_width"] = std::to_string(p.window().width);
  m["stride"] = std::to_string(p.window().stride);
  m["tau"] = format_double(p.tau());
  m["num_decays"] = std::to_string(p.num_decays());
  m["in_channels"] = std::to_string(p.in_channels());
  m["out_channels"] = std::to_string(p.out_channels());
  std::string lambdas;
  for (std::size_t k = 0; k < p.lambdas().size(); ++k) {
    lambdas += (k ? "," : "") + format_double(p.lambdas()[k]);
  }
  m["lambda"] = lambdas;
}

EventKernelParams get_event_kernel(const Manifest& m, const fs::path& path) {
  SpatialWindow window;
  window.height = static_cast<std::int32_t>(key_size(m, "window_height", path));
  window.width = static_cast<std::int32_t>(key_size(m, "window_width", path));
  window.stride = static_cast<std::int32_t>(key_size(m, "stride", path));
  const double tau = key_double(m, "tau", path);
  require(tau > 0.0 && std::isfinite(tau), ErrorKind::kValidation,
          path.string() + ": tau must be positive");
  const std::size_t num_decays = key_size(m, "num_decays", path);
  const std::size_t q = key_size(m, "in_channels", path);
  const std::size_t p = key_size(m, "out_channels", path);
  std::vector<double> lambda;
  for (const auto& f : split(require_key(m, "lambda", path), ',')) {
    double v = 0.0;
    require(parse_double(f, v), ErrorKind::kFormat,
            path.string() + ": lambda entry '" + f + "' is not a number");
    require(v > 0.0 && std::isfinite(v), ErrorKind::kValidation,
            path.string() + ": lambda entries must be positive, found " + f);
    lambda.push_back(v);
  }
  const std::size_t terms = window.size() * num_decays;
  require(lambda.size() == terms, ErrorKind::kFormat,
          path.string() + ": lambda has " + std::to_string(lambda.size()) +
              " entries, expected " + std::to_string(terms));
  const Tensor t = read_payload(m, path);
  check_dims(t,
             {static_cast<std::uint32_t>(terms), static_cast<std::uint32_t>(q),
              static_cast<std::uint32_t>(p)},
             path);
  return EventKernelParams(window, num_decays, tau, std::move(lambda), split_blocks(t));
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_tensor(const fs::path& path, const Tensor& tensor) {
  require(tensor.dims.size() <= kMaxRank, ErrorKind::kFormat, "tensor rank exceeds 4");
  std::size_t count = 1;
  for (auto d : tensor.dims) count *= d;
  require(count == tensor.values.size(), ErrorKind::kFormat,
          "tensor payload does not match its dimensions");
  std::string buf(kTensorMagic, 4);
  put_u32(buf, static_cast<std::uint32_t>(tensor.dims.size()));
  for (auto d : tensor.dims) put_u32(buf, d);
  for (double v : tensor.values) put_f64(buf, v);
  auto out = open_out(path, std::ios::binary);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  require(out.good(), ErrorKind::kIo, "write failed for " + path.string());
}

Tensor read_tensor(const fs::path& path) {
  auto in = open_in(path, std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  require(bytes.size() >= 8 && std::memcmp(p, kTensorMagic, 4) == 0, ErrorKind::kFormat,
          path.string() + ": not a CDCT tensor file");
  const auto rank = static_cast<std::uint32_t>(get_le(p + 4, 4));
  require(rank <= kMaxRank, ErrorKind::kFormat, path.string() + ": rank exceeds 4");
  require(bytes.size() >= 8 + 4 * std::size_t{rank}, ErrorKind::kFormat,
          path.string() + ": truncated header");
  Tensor t;
  std::size_t count = 1;
  for (std::uint32_t k = 0; k < rank; ++k) {
    t.dims.push_back(static_cast<std::uint32_t>(get_le(p + 8 + 4 * k, 4)));
    count *= t.dims.back();
  }
  const std::size_t header = 8 + 4 * std::size_t{rank};
  require(bytes.size() == header + 8 * count, ErrorKind::kFormat,
          path.string() + ": payload holds " + std::to_string(bytes.size() - header) +
              " bytes, expected " + std::to_string(8 * count));
  t.values.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    t.values[k] = std::bit_cast<double>(get_le(p + header + 8 * k, 8));
  }
  return t;
}

bool is_tensor_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[4] = {};
  in.read(magic, 4);
  return in.gcount() == 4 && std::memcmp(magic, kTensorMagic, 4) == 0;
}

Matrix read_matrix(const fs::path& path) {
  if (is_tensor_file(path)) return tensor_to_matrix(path, read_tensor(path));
  return read_csv_matrix(path);
}

void write_matrix(const fs::path& path, const Matrix& m, TableFormat format) {
  if (format == TableFormat::kTensor) {
    write_tensor(path, {{static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())},
                        m.storage()});
    return;
  }
  auto out = open_out(path);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out << (c ? "," : "") << format_double(m(r, c));
    out << '\n';
  }
}

PointCloud read_point_cloud(const fs::path& path) {
  Matrix m = read_matrix(path);
  require(m.rows() == 0 || m.cols() > 0, ErrorKind::kParse, path.string() + ": empty rows");
  require(m.all_finite(), ErrorKind::kValidation,
          path.string() + ": point coordinates must be finite");
  if (m.rows() == 0) return PointCloud();
  return PointCloud(m.cols(), std::vector<double>(m.values().begin(), m.values().end()));
}

void write_point_cloud(const fs::path& path, const PointCloud& cloud, TableFormat format) {
  write_matrix(path, Matrix(cloud.size(), cloud.dim(), cloud.coords()), format);
}

EventStream read_event_stream(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  std::size_t lineno = 0;
  std::optional<GridShape> grid;
  std::vector<Event> events;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '%') {
      require(!grid, ErrorKind::kParse, where(path, lineno) + "duplicate grid header");
      const auto f = split(t.substr(1), ',');
      long long h = 0;
      long long w = 0;
      require(f.size() == 2 && parse_int(f[0], h) && parse_int(f[1], w) && h > 0 && w > 0,
              ErrorKind::kParse, where(path, lineno) + "grid header must be '%H,W'");
      grid = GridShape{static_cast<std::int32_t>(h), static_cast<std::int32_t>(w)};
      continue;
    }
    if (t[0] == '#') continue;
    require(grid.has_value(), ErrorKind::kParse,
            where(path, lineno) + "event before the '%H,W' grid header");
    const auto f = split(t, ',');
    require(f.size() == 4, ErrorKind::kParse,
            where(path, lineno) + "expected 't,x,y,p', found " + std::to_string(f.size()) +
                " fields");
    long long ts = 0, x = 0, y = 0, pol = 0;
    require(parse_int(f[0], ts) && ts >= 0, ErrorKind::kParse,
            where(path, lineno) + "timestamp must be a non-negative integer");
    require(parse_int(f[1], x) && parse_int(f[2], y), ErrorKind::kParse,
            where(path, lineno) + "pixel coordinates must be integers");
    require(parse_int(f[3], pol) && (pol == 0 || pol == 1), ErrorKind::kParse,
            where(path, lineno) + "polarity must be 0 or 1");
    require(x >= 0 && y >= 0 && x < grid->width && y < grid->height, ErrorKind::kRange,
            where(path, lineno) + "pixel (" + f[1] + "," + f[2] + ") outside the " +
                std::to_string(grid->height) + "x" + std::to_string(grid->width) + " grid");
    const double time = static_cast<double>(ts);
    require(events.empty() || events.back().t <= time, ErrorKind::kSortedness,
            where(path, lineno) + "timestamp decreases");
    events.push_back({time, static_cast<std::int32_t>(x), static_cast<std::int32_t>(y),
                      static_cast<std::uint8_t>(pol)});
  }
  require(grid.has_value(), ErrorKind::kParse, path.string() + ": missing '%H,W' grid header");
  return EventStream(*grid, std::move(events));
}

namespace {

long long integral_time(double t) {
  require(std::floor(t) == t && t >= 0.0, ErrorKind::kFormat,
          "event time " + format_double(t) + " is not a whole number of microseconds");
  return static_cast<long long>(t);
}

}  // namespace

void write_event_stream(const fs::path& path, const EventStream& stream) {
  auto out = open_out(path);
  out << '%' << stream.grid().height << ',' << stream.grid().width << '\n';
  for (const Event& ev : stream.events()) {
    out << integral_time(ev.t) << ',' << ev.x << ',' << ev.y << ',' << int{ev.polarity} << '\n';
  }
}

void write_event_features(const fs::path& path, const EventStream& stream,
                          const Matrix& features) {
  require(features.rows() == stream.size(), ErrorKind::kArgument,
          "feature rows do not match the event count");
  auto out = open_out(path);
  out << '%' << stream.grid().height << ',' << stream.grid().width << '\n';
  for (std::size_t i = 0; i < stream.size(); ++i) {
    out << format_double(stream[i].t) << ',' << stream[i].x << ',' << stream[i].y;
    for (double v : features.row(i)) out << ',' << format_double(v);
    out << '\n';
  }
}

Manifest read_manifest(const fs::path& path) {
  auto in = open_in(path);
  Manifest m;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    require(eq != std::string::npos && eq > 0, ErrorKind::kParse,
            where(path, lineno) + "expected key=value");
    m[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return m;
}

void write_manifest(const fs::path& path, const Manifest& manifest) {
  auto out = open_out(path);
  for (const auto& [k, v] : manifest) out << k << '=' << v << '\n';
}

void write_kernel_params(const fs::path& manifest, const KernelParams& params) {
  const fs::path payload = payload_path(manifest);
  write_tensor(payload, join_blocks(params.blocks()));
  write_manifest(manifest, {{"kind", "kernel"},
                            {"num_basis", std::to_string(params.num_basis())},
                            {"in_channels", std::to_string(params.in_channels())},
                            {"out_channels", std::to_string(params.out_channels())},
                            {"payload", payload.filename().string()}});
}

KernelParams read_kernel_params(const fs::path& manifest) {
  const Manifest m = read_manifest(manifest);
  expect_kind(m, "kernel", manifest);
  const auto dims = std::vector<std::uint32_t>{
      static_cast<std::uint32_t>(key_size(m, "num_basis", manifest)),
      static_cast<std::uint32_t>(key_size(m, "in_channels", manifest)),
      static_cast<std::uint32_t>(key_size(m, "out_channels", manifest))};
  const Tensor t = read_payload(m, manifest);
  check_dims(t, dims, manifest);
  KernelParams params(split_blocks(t));
  for (const auto& b : params.blocks()) {
    require(b.all_finite(), ErrorKind::kValidation, manifest.string() + ": non-finite weights");
  }
  return params;
}

KernelParams load_kernel_params(const fs::path& path) {
  if (!is_tensor_file(path)) return read_kernel_params(path);
  const Tensor t = read_tensor(path);
  require(t.dims.size() == 3, ErrorKind::kFormat,
          path.string() + ": kernel tensor must have rank 3 (M, Q, P)");
  return KernelParams(split_blocks(t));
}

void write_featureless_params(const fs::path& manifest, const FeaturelessParams& params) {
  const fs::path payload = payload_path(manifest);
  write_matrix(payload, params.weights, TableFormat::kTensor);
  write_manifest(manifest, {{"kind", "featureless"},
                            {"num_basis", std::to_string(params.weights.rows())},
                            {"out_channels", std::to_string(params.weights.cols())},
                            {"payload", payload.filename().string()}});
}

FeaturelessParams read_featureless_params(const fs::path& manifest) {
  const Manifest m = read_manifest(manifest);
  expect_kind(m, "featureless", manifest);
  const auto dims = std::vector<std::uint32_t>{
      static_cast<std::uint32_t>(key_size(m, "num_basis", manifest)),
      static_cast<std::uint32_t>(key_size(m, "out_channels", manifest))};
  Tensor t = read_payload(m, manifest);
  check_dims(t, dims, manifest);
  return {Matrix(dims[0], dims[1], std::move(t.values))};
}

void write_event_params(const fs::path& manifest, const EventKernelParams& params) {
  const fs::path payload = payload_path(manifest);
  write_tensor(payload, join_blocks(params.thetas()));
  Manifest m{{"kind", "event_kernel"}, {"payload", payload.filename().string()}};
  put_event_kernel(m, params);
  write_manifest(manifest, m);
}

EventKernelParams read_event_params(const fs::path& manifest) {
  const Manifest m = read_manifest(manifest);
  expect_kind(m, "event_kernel", manifest);
  return get_event_kernel(m, manifest);
}

void write_event_sim_config(const fs::path& manifest, const EventSimConfig& config) {
  const fs::path payload = payload_path(manifest);
  write_tensor(payload, join_blocks(config.conv.thetas()));
  Manifest m{{"kind", "event_sim"}, {"payload", payload.filename().string()}};
  put_event_kernel(m, config.conv);
  m["lif_tau"] = format_double(config.lif.tau);
  m["v_thresh"] = format_double(config.lif.v_thresh);
  m["v_reset"] = format_double(config.lif.v_reset);
  m["crop_window"] = config.crop_window ? format_double(*config.crop_window) : "none";
  write_manifest(manifest, m);
}

EventSimConfig read_event_sim_config(const fs::path& manifest) {
  const Manifest m = read_manifest(manifest);
  expect_kind(m, "event_sim", manifest);
  EventSimConfig config{LIFConfig{}, get_event_kernel(m, manifest), std::nullopt};
  config.lif.window = config.conv.window();
  config.lif.tau = key_double(m, "lif_tau", manifest);
  config.lif.v_thresh = key_double(m, "v_thresh", manifest);
  config.lif.v_reset = key_double(m, "v_reset", manifest);
  require(config.lif.tau > 0.0, ErrorKind::kValidation, manifest.string() + ": lif_tau must be positive");
  require(config.lif.v_thresh > 0.0, ErrorKind::kValidation,
          manifest.string() + ": v_thresh must be positive");
  auto crop = m.find("crop_window");
  if (crop != m.end() && crop->second != "none") {
    double c = 0.0;
    require(parse_double(crop->second, c) && c >= 0.0, ErrorKind::kFormat,
            manifest.string() + ": crop_window must be a non-negative number or 'none'");
    config.crop_window = c;
  }
  return config;
}

void write_indices(const fs::path& path, const std::vector<std::size_t>& indices) {
  auto out = open_out(path);
  for (std::size_t i : indices) out << i << '\n';
}

std::vector<std::size_t> read_indices(const fs::path& path) {
  auto in = open_in(path);
  std::vector<std::size_t> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    long long v = 0;
    require(parse_int(t, v) && v >= 0, ErrorKind::kParse,
            where(path, lineno) + "expected a non-negative index");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

void write_column(const fs::path& path, const std::vector<double>& values) {
  auto out = open_out(path);
  for (double v : values) out << format_double(v) << '\n';
}

}  // namespace cdconv::io
