#include <cmath>

#include "cdconv/streaming.hpp"
#include "doctest.h"
#include "oracle.hpp"

using namespace cdconv;

namespace {

EventKernelParams scalar_kernel() {
  return EventKernelParams({1, 1, 1}, 1, 1.0, {std::log(2.0)}, {Matrix(1, 1, 1.0)});
}

EventStream single_pixel(std::vector<double> times) {
  std::vector<Event> ev;
  for (double t : times) ev.push_back({t, 0, 0, 1});
  return EventStream({1, 1}, std::move(ev));
}

}  // namespace

TEST_SUITE("streaming") {
  TEST_CASE("fresh state") {
    Rng rng(1);
    std::vector<double> lambda(9 * 2, 1.0);
    std::vector<Matrix> theta(18, oracle::random_matrix(rng, 4, 8));
    const EventKernelParams params({3, 3, 2}, 2, 10.0, lambda, theta);
    const StreamState s = stream_init({6, 5}, params);
    CHECK(s == stream_init({6, 5}, params));
    CHECK(s.state_size() == 6u * 5u * (9u * 2u * 4u + 1u));
    CHECK(s.output_grid() == GridShape{3, 3});
    for (double v : s.query(100.0, 1, 2)) CHECK(v == 0.0);
  }

  TEST_CASE("EMA updates") {
    StreamState s = stream_init({1, 1}, scalar_kernel());
    const std::vector<double> one{1.0};
    s.on_input(0.0, 0, 0, one);
    CHECK(s.ema(0, 0, 0)[0] == 1.0);
    s.on_input(1.0, 0, 0, one);
    CHECK(s.ema(0, 0, 0)[0] == 1.5);
    CHECK(s.query(2.0, 0, 0)[0] == 0.75);
    CHECK(s.query(2.0, 0, 0) == s.query(2.0, 0, 0));

    StreamState same = stream_init({1, 1}, scalar_kernel());
    same.on_input(3.0, 0, 0, one);
    same.on_input(3.0, 0, 0, one);
    CHECK(same.ema(0, 0, 0)[0] == 2.0);
    CHECK_THROWS_AS(same.on_input(2.0, 0, 0, one), Error);
  }

  TEST_CASE("dual equivalence") {
    CHECK(dual_equivalence_check(single_pixel({0.0, 1.0}), Matrix(2, 1, 1.0), single_pixel({2.0}),
                                 scalar_kernel()) <= 1e-15);
    const Matrix out = streaming_conv(single_pixel({0.0, 1.0}), Matrix(2, 1, 1.0),
                                      single_pixel({2.0}), scalar_kernel());
    CHECK(out(0, 0) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(dual_equivalence_check(single_pixel({0.0}), Matrix(1, 1, 1.0), single_pixel({}),
                                 scalar_kernel()) == 0.0);

    Rng rng(2);
    for (std::int32_t stride : {1, 2}) {
      const SpatialWindow w{3, 3, stride};
      std::vector<double> lambda(18);
      for (double& l : lambda) l = rng.uniform(0.1, 2.0);
      std::vector<Matrix> theta;
      for (int k = 0; k < 18; ++k) theta.push_back(oracle::random_matrix(rng, 4, 8));
      const EventKernelParams params(w, 2, 1000.0, lambda, theta);
      const EventStream in = oracle::random_events(rng, {32, 32}, 1000, 20000.0);
      const EventStream out = oracle::random_events(rng, w.output_grid({32, 32}), 200, 20000.0);
      const Matrix f = oracle::random_matrix(rng, 1000, 4);
      CHECK(dual_equivalence_check(in, f, out, params) <= 1e-9);
      CHECK(oracle::rel_err(streaming_conv(in, f, out, params),
                            oracle::event_conv_direct(in, f, out, params)) <= 1e-9);
    }
  }
}
