#include <limits>

#include "cdconv/sampling.hpp"
#include "doctest.h"
#include "oracle.hpp"

using namespace cdconv;

namespace {
PointCloud fixture() { return PointCloud(1, {0.0, 0.4, 0.9, 2.0}); }
using Idx = std::vector<std::size_t>;
}  // namespace

TEST_SUITE("sampling") {
  TEST_CASE("ifp hand trace") {
    const SampleResult r = ifp_sample(fixture(), 2);
    CHECK(r.indices == Idx{0, 3});
    // Exhaustion gives a permutation starting at 0.
    Idx all = ifp_sample(fixture(), 4).indices;
    CHECK(all.front() == 0);
    std::sort(all.begin(), all.end());
    CHECK(all == Idx{0, 1, 2, 3});
    CHECK_THROWS_AS(ifp_sample(fixture(), 5), Error);
  }

  TEST_CASE("ifp matches greedy oracle") {
    Rng rng(5);
    for (int trial = 0; trial < 5; ++trial) {
      const PointCloud c = oracle::random_cloud(rng, 50, 2);
      CHECK(ifp_sample(c, 10).indices == oracle::greedy_farthest(c, 10));
    }
  }

  TEST_CASE("approximate ifp") {
    const PointCloud c = fixture();
    const Neighborhood self = ball_search(c, c, 1.0);
    CHECK(approx_ifp_sample(c, 2, self).indices == Idx{0, 3});
    CHECK(approx_ifp_sample(c, 1, self).indices == Idx{0});

    Rng rng(9);
    const PointCloud dense = oracle::random_cloud(rng, 60, 3);
    const Neighborhood all = ball_search(dense, dense, 10.0);
    CHECK(approx_ifp_sample(dense, 20, all).indices == ifp_sample(dense, 20).indices);
  }

  TEST_CASE("distance queue pops the largest key, lowest index on ties") {
    DistanceQueue q(3);
    q.update(1, 2.0);
    q.update(0, 2.0);
    q.update(2, 5.0);
    q.update(2, 7.0);  // larger candidates never raise a key
    CHECK(q.keys()[2] == 5.0);
    CHECK(q.pop() == 2);
    CHECK(q.pop() == 0);
    CHECK(q.pop() == 1);
    CHECK(q.empty());
    CHECK_THROWS_AS(q.pop(), Error);
  }

  TEST_CASE("rejection hand trace") {
    const SampleResult r = rejection_sample(fixture(), 1.0);
    CHECK(r.indices == Idx{0, 3});
    CHECK(r.min_dist == std::vector<double>{0.0, 0.4, 0.9, 0.0});
    const SampleResult one = rejection_sample(PointCloud(1, {3.0}), 1.0);
    CHECK(one.indices == Idx{0});
    CHECK(one.min_dist == std::vector<double>{0.0});
  }

  TEST_CASE("rejection separation and coverage") {
    Rng rng(13);
    for (int trial = 0; trial < 10; ++trial) {
      const PointCloud c = oracle::random_cloud(rng, 150, 2);
      const double r = rng.uniform(0.05, 0.3);
      const Idx sel = rejection_sample(c, r).indices;
      for (std::size_t a = 0; a < sel.size(); ++a)
        for (std::size_t b = a + 1; b < sel.size(); ++b)
          CHECK(oracle::dist(c, sel[a], c, sel[b]) >= r);
      for (std::size_t j = 0; j < c.size(); ++j) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t s : sel) best = std::min(best, oracle::dist(c, j, c, s));
        CHECK(best <= r);
      }
    }
  }

  TEST_CASE("combined sampler") {
    CHECK(approx_ifp_with_rejection(fixture(), 3, 1.0).indices == Idx{0, 3, 2});
    CHECK(approx_ifp_with_rejection(fixture(), 2, 1.0).indices == Idx{0, 3});

    Rng rng(21);
    const PointCloud c = oracle::random_cloud(rng, 500, 3);
    const Idx base = rejection_sample(c, 0.1).indices;
    const Idx full = approx_ifp_with_rejection(c, 300, 0.1).indices;
    REQUIRE(full.size() == 300);
    REQUIRE(base.size() <= 300);
    CHECK(Idx(full.begin(), full.begin() + static_cast<long>(base.size())) == base);
    Idx sorted = full;
    std::sort(sorted.begin(), sorted.end());
    CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
  }

  TEST_CASE("combined sampler truncates when rejection overshoots") {
    Rng rng(2);
    const PointCloud c = oracle::random_cloud(rng, 200, 2);
    const Idx base = rejection_sample(c, 0.05).indices;
    REQUIRE(base.size() > 5);
    CHECK(approx_ifp_with_rejection(c, 5, 0.05).indices == Idx(base.begin(), base.begin() + 5));
  }
}
