#include "cdconv/kernel.hpp"
#include "doctest.h"
#include "oracle.hpp"

using namespace cdconv;

TEST_SUITE("kernel") {
  TEST_CASE("basis enumeration") {
    const BasisSet b = monomial_basis(2, 1);
    CHECK(b.exponents() == std::vector<MultiIndex>{{0, 0}, {1, 0}, {0, 1}});
    CHECK(monomial_basis(3, 2).size() == 10);
    CHECK(monomial_count(3, 2) == 10);
    CHECK(monomial_basis(3, 0).exponents() == std::vector<MultiIndex>{{0, 0, 0}});
    for (std::size_t d = 1; d <= 4; ++d)
      for (std::uint32_t k = 0; k <= 4; ++k) CHECK(monomial_basis(d, k).size() == monomial_count(d, k));
  }

  TEST_CASE("basis evaluation") {
    const std::vector<double> zero{0.0, 0.0};
    CHECK(monomial_basis(2, 1).eval(zero) == std::vector<double>{1.0, 0.0, 0.0});
    const std::vector<double> dx{2.0, 3.0};
    CHECK(monomial_basis(2, 2).eval(dx) == std::vector<double>{1, 2, 3, 4, 6, 9});
  }

  TEST_CASE("basis parity") {
    Rng rng(1);
    const BasisSet b = monomial_basis(3, 3);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> dx{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
      std::vector<double> neg{-dx[0], -dx[1], -dx[2]};
      const auto p = b.eval(dx);
      const auto n = b.eval(neg);
      for (std::size_t m = 0; m < b.size(); ++m) {
        CHECK(n[m] == (b.degree(m) % 2 ? -p[m] : p[m]));
        CHECK(p[m] == doctest::Approx(oracle::monomial(b.exponents()[m], dx.data())).epsilon(1e-14));
      }
    }
  }

  TEST_CASE("neighborhood tensor") {
    const Neighborhood nb(1, 2, 1, {0, 2}, {0, 1}, {0.5, -0.5}, 1.0);
    const BasisSet b = monomial_basis(1, 1);
    const NeighborhoodTensor plain = build_neighborhood_tensor(nb, b, false);
    CHECK(plain.values() == std::vector<double>{1.0, 0.5, 1.0, -0.5});
    const NeighborhoodTensor w = build_neighborhood_tensor(nb, b, true);
    CHECK(w.values() == std::vector<double>{0.5, 0.25, 0.5, -0.25});
    CHECK(w.weighted());
  }

  TEST_CASE("edge on the sphere has zero weight") {
    const Neighborhood nb(1, 2, 1, {0, 2}, {0, 1}, {1.0, 0.5}, 1.0);
    const NeighborhoodTensor w = build_neighborhood_tensor(nb, monomial_basis(1, 2), true);
    for (double v : w.edge_values(0)) CHECK(v == 0.0);
    CHECK(w.value(1, 0) == 1.0);
    CHECK(radius_weight(1.0, 1.0) == 0.0);
    CHECK(radius_weight(0.25, 1.0) == 0.75);
  }

  TEST_CASE("weighting needs a radius") {
    const Neighborhood nb(1, 1, 1, {0, 1}, {0}, {0.0}, std::nullopt);
    CHECK_THROWS_AS(build_neighborhood_tensor(nb, monomial_basis(1, 1), true), Error);
    CHECK_THROWS_AS(build_neighborhood_tensor(nb, monomial_basis(2, 1), false), Error);
  }
}
