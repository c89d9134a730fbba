#include <cmath>
#include <limits>

#include "cdconv/geometry.hpp"
#include "doctest.h"
#include "oracle.hpp"

using namespace cdconv;

namespace {
PointCloud line(std::vector<double> xs) { return PointCloud(1, std::move(xs)); }
}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("point cloud rejects non-finite coordinates") {
    CHECK_THROWS_AS(line({0.0, std::nan("")}), Error);
    CHECK_THROWS_AS(line({std::numeric_limits<double>::infinity()}), Error);
    CHECK_THROWS_AS(PointCloud(2, {1.0, 2.0, 3.0}), Error);
  }

  TEST_CASE("grid buckets use floor") {
    GridIndex g(line({0.0, 0.4, 0.9, 2.0}), 1.0);
    REQUIRE(g.buckets().size() == 2);
    CHECK(*g.bucket({0}) == std::vector<std::size_t>{0, 1, 2});
    CHECK(*g.bucket({2}) == std::vector<std::size_t>{3});
    CHECK(g.bucket({1}) == nullptr);

    GridIndex empty(PointCloud(1, {}), 1.0);
    CHECK(empty.buckets().empty());

    const PointCloud one = line({1.0});
    GridIndex edge(one, 1.0);
    CHECK(edge.cell_of(one.point(0)) == CellKey{1});
  }

  TEST_CASE("ball search on a line") {
    const PointCloud src = line({0.0, 0.5, 2.0});
    const PointCloud q = line({0.0});
    const Neighborhood nb = ball_search(src, q, 1.0);
    REQUIRE(nb.num_edges() == 2);
    CHECK(nb.in_index() == std::vector<std::size_t>{0, 1});
    CHECK(nb.deltas() == std::vector<double>{0.0, -0.5});
    CHECK(nb.row_splits() == std::vector<std::size_t>{0, 2});
    CHECK(nb == brute_force_ball_search(src, q, 1.0));
  }

  TEST_CASE("self query includes every point") {
    const PointCloud c = line({0.0, 0.4, 0.9, 2.0});
    const Neighborhood nb = ball_search(c, c, 1.0);
    for (std::size_t i = 0; i < c.size(); ++i) {
      bool self = false;
      for (std::size_t e = nb.row_splits()[i]; e < nb.row_splits()[i + 1]; ++e)
        if (nb.in_index()[e] == i) self = nb.delta(e)[0] == 0.0;
      CHECK(self);
    }
  }

  TEST_CASE("radius zero keeps only coincident pairs") {
    const PointCloud c = line({0.0, 0.0, 1.0});
    const Neighborhood nb = brute_force_ball_search(c, line({0.0}), 0.0);
    CHECK(nb.in_index() == std::vector<std::size_t>{0, 1});
    CHECK(ball_search(c, line({0.0}), 0.0) == nb);
  }

  TEST_CASE("grid search matches all-pairs filter") {
    Rng rng(7);
    for (int trial = 0; trial < 5; ++trial) {
      const PointCloud src = oracle::random_cloud(rng, 200, 3);
      const PointCloud q = oracle::random_cloud(rng, 50, 3);
      const Neighborhood nb = ball_search(src, q, 0.2);
      CHECK(oracle::edge_pairs(nb) == oracle::ball_pairs(src, q, 0.2));
      CHECK(nb == brute_force_ball_search(src, q, 0.2));
      // Explicit index with a coarser cell.
      CHECK(ball_search(GridIndex(src, 0.5), q, 0.2) == nb);
    }
  }

  TEST_CASE("knn") {
    const Neighborhood nb = knn_search(line({0.0, 1.0, 3.0}), line({0.0}), 2);
    CHECK(nb.in_index() == std::vector<std::size_t>{0, 1});
    CHECK_FALSE(nb.radius().has_value());

    const Neighborhood tie = knn_search(line({1.0, -1.0}), line({0.0}), 1);
    CHECK(tie.in_index() == std::vector<std::size_t>{0});

    Rng rng(3);
    const PointCloud src = oracle::random_cloud(rng, 100, 3);
    const PointCloud q = oracle::random_cloud(rng, 10, 3);
    const Neighborhood got = knn_search(src, q, 5);
    for (std::size_t i = 0; i < q.size(); ++i) {
      std::vector<std::pair<double, std::size_t>> all;
      for (std::size_t j = 0; j < src.size(); ++j) all.emplace_back(oracle::dist(q, i, src, j), j);
      std::sort(all.begin(), all.end());
      std::vector<std::size_t> want;
      for (int k = 0; k < 5; ++k) want.push_back(all[k].second);
      std::sort(want.begin(), want.end());
      std::vector<std::size_t> have(got.in_index().begin() + got.row_splits()[i],
                                    got.in_index().begin() + got.row_splits()[i + 1]);
      CHECK(have == want);
    }
  }

  TEST_CASE("neighborhood validates its structure") {
    CHECK_THROWS_AS(Neighborhood(1, 2, 1, {0, 2}, {1, 0}, {0.0, 0.0}, 1.0), Error);
    CHECK_THROWS_AS(Neighborhood(1, 2, 1, {0, 1}, {5}, {0.0}, 1.0), Error);
    CHECK_THROWS_AS(Neighborhood(1, 2, 1, {0, 1}, {0}, {0.0, 1.0}, 1.0), Error);
    CHECK_THROWS_AS(ball_search(line({0.0}), line({0.0}), -1.0), Error);
    CHECK_THROWS_AS(ball_search(line({0.0}), PointCloud(2, {0.0, 0.0}), 1.0), Error);
  }

  TEST_CASE("symmetric neighborhoods are transposes with negated deltas") {
    Rng rng(11);
    const PointCloud a = oracle::random_cloud(rng, 60, 2);
    const PointCloud b = oracle::random_cloud(rng, 40, 2);
    const Neighborhood ab = ball_search(a, b, 0.25);
    const Neighborhood ba = ball_search(b, a, 0.25);
    REQUIRE(ab.num_edges() == ba.num_edges());
    std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> fwd;
    for (std::size_t e = 0; e < ab.num_edges(); ++e)
      fwd[{ab.out_index()[e], ab.in_index()[e]}] = {ab.delta(e).begin(), ab.delta(e).end()};
    for (std::size_t e = 0; e < ba.num_edges(); ++e) {
      auto it = fwd.find({ba.in_index()[e], ba.out_index()[e]});
      REQUIRE(it != fwd.end());
      for (std::size_t d = 0; d < 2; ++d) CHECK(ba.delta(e)[d] == -it->second[d]);
    }
  }
}
