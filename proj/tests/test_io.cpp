#include <cmath>
#include <fstream>
#include <limits>

#include "cdconv/io.hpp"
#include "doctest.h"
#include "oracle.hpp"

using namespace cdconv;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("cdconv_io_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)) + "_" +
            std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path operator/(const std::string& name) const { return path / name; }
};

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

template <typename F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::kState;
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("csv point cloud") {
    TempDir dir;
    write_text(dir / "c.csv", "0.0,0.0,0.0\n1.0,0.0,0.0\n");
    const PointCloud c = io::read_point_cloud(dir / "c.csv");
    CHECK(c.size() == 2);
    CHECK(c.dim() == 3);

    write_text(dir / "bad.csv", "0,0,0\n1,2\n");
    try {
      io::read_point_cloud(dir / "bad.csv");
      FAIL("expected a parse error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kParse);
      CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
  }

  TEST_CASE("round trips are exact") {
    TempDir dir;
    Rng rng(1);
    const Matrix m = oracle::random_matrix(rng, 7, 3);
    io::write_matrix(dir / "m.cdct", m, io::TableFormat::kTensor);
    CHECK(io::is_tensor_file(dir / "m.cdct"));
    CHECK(io::read_matrix(dir / "m.cdct") == m);
    io::write_matrix(dir / "m.csv", m, io::TableFormat::kCsv);
    CHECK_FALSE(io::is_tensor_file(dir / "m.csv"));
    CHECK(io::read_matrix(dir / "m.csv") == m);

    const io::Tensor t{{2, 1, 3}, {1, 2, 3, 4, 5, std::nextafter(6.0, 7.0)}};
    io::write_tensor(dir / "t.cdct", t);
    const io::Tensor back = io::read_tensor(dir / "t.cdct");
    CHECK(back.dims == t.dims);
    CHECK(back.values == t.values);

    std::ifstream raw(dir / "t.cdct", std::ios::binary);
    char magic[4];
    raw.read(magic, 4);
    CHECK(std::string(magic, 4) == "CDCT");
    CHECK(fs::file_size(dir / "t.cdct") == 4 + 4 + 3 * 4 + 6 * 8);
  }

  TEST_CASE("truncated tensor payload") {
    TempDir dir;
    io::write_tensor(dir / "t.cdct", {{4}, {1, 2, 3, 4}});
    fs::resize_file(dir / "t.cdct", fs::file_size(dir / "t.cdct") - 8);
    CHECK(kind_of([&] { io::read_tensor(dir / "t.cdct"); }) == ErrorKind::kFormat);
    CHECK(kind_of([&] { io::read_tensor(dir / "missing.cdct"); }) == ErrorKind::kIo);
  }

  TEST_CASE("event streams") {
    TempDir dir;
    write_text(dir / "e.csv", "%128,128\n0,5,7,1\n3,5,7,0\n");
    const EventStream s = io::read_event_stream(dir / "e.csv");
    CHECK(s.size() == 2);
    CHECK(s.grid() == GridShape{128, 128});
    CHECK(s[1] == Event{3.0, 5, 7, 0});

    write_text(dir / "empty.csv", "%4,4\n");
    CHECK(io::read_event_stream(dir / "empty.csv").empty());

    write_text(dir / "unsorted.csv", "%4,4\n5,0,0,1\n3,0,0,1\n");
    try {
      io::read_event_stream(dir / "unsorted.csv");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find(":3") != std::string::npos);
    }

    io::write_event_stream(dir / "out.csv", s);
    CHECK(io::read_event_stream(dir / "out.csv") == s);
  }

  TEST_CASE("kernel parameters") {
    TempDir dir;
    Rng rng(2);
    std::vector<Matrix> blocks;
    for (int m = 0; m < 10; ++m) blocks.push_back(oracle::random_matrix(rng, 3, 5));
    const KernelParams k(blocks);
    io::write_kernel_params(dir / "k.txt", k);
    CHECK(io::read_kernel_params(dir / "k.txt") == k);
    CHECK(io::load_kernel_params(dir / "k.txt") == k);
    CHECK(io::load_kernel_params(dir / "k.txt.cdct") == k);

    auto m = io::read_manifest(dir / "k.txt");
    m["num_basis"] = "4";
    io::write_manifest(dir / "k.txt", m);
    CHECK(kind_of([&] { io::read_kernel_params(dir / "k.txt"); }) == ErrorKind::kFormat);
  }

  TEST_CASE("featureless parameters") {
    TempDir dir;
    Rng rng(3);
    const FeaturelessParams p{oracle::random_matrix(rng, 4, 6)};
    io::write_featureless_params(dir / "f.txt", p);
    CHECK(io::read_featureless_params(dir / "f.txt").weights == p.weights);
  }

  TEST_CASE("event parameters and lambda validation") {
    TempDir dir;
    Rng rng(4);
    std::vector<Matrix> theta;
    for (int k = 0; k < 18; ++k) theta.push_back(oracle::random_matrix(rng, 2, 3));
    std::vector<double> lambda(18);
    for (double& l : lambda) l = rng.uniform(0.1, 1.0);
    const EventKernelParams p({3, 3, 2}, 2, 250.0, lambda, theta);
    io::write_event_params(dir / "e.txt", p);
    CHECK(io::read_event_params(dir / "e.txt") == p);

    auto m = io::read_manifest(dir / "e.txt");
    m["lambda"] = "0" + m["lambda"].substr(m["lambda"].find(','));
    io::write_manifest(dir / "e.txt", m);
    CHECK(kind_of([&] { io::read_event_params(dir / "e.txt"); }) == ErrorKind::kValidation);
  }

  TEST_CASE("event simulation config") {
    TempDir dir;
    io::EventSimConfig cfg{
        {5.0, std::numeric_limits<double>::infinity(), 0.0, {1, 1, 1}},
        EventKernelParams({1, 1, 1}, 1, 1.0, {0.5}, {Matrix(2, 1, 1.0)}),
        std::nullopt};
    io::write_event_sim_config(dir / "s.txt", cfg);
    const io::EventSimConfig back = io::read_event_sim_config(dir / "s.txt");
    CHECK(back.conv == cfg.conv);
    CHECK(std::isinf(back.lif.v_thresh));
    CHECK_FALSE(back.crop_window.has_value());
    CHECK(kind_of([&] { io::read_kernel_params(dir / "s.txt"); }) == ErrorKind::kFormat);
  }

  TEST_CASE("manifest syntax") {
    TempDir dir;
    write_text(dir / "m.txt", "# comment\nkind = kernel\n\nnum_basis=2\n");
    const auto m = io::read_manifest(dir / "m.txt");
    CHECK(m.at("kind") == "kernel");
    CHECK(m.at("num_basis") == "2");
    write_text(dir / "bad.txt", "kind kernel\n");
    CHECK(kind_of([&] { io::read_manifest(dir / "bad.txt"); }) == ErrorKind::kParse);
  }
}
