#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "helpers.hpp"
#include "oracles.hpp"
#include "pwsync/errors.hpp"
#include "pwsync/graph.hpp"

using namespace pwsync;

// Realized ER(50, 0.5) graph used by the relay experiments.
constexpr std::uint64_t kRelaySeed = 16;
constexpr double kRelayLambda2 = 14.808155773103831;

TEST_SUITE("graph") {
  TEST_CASE("ring k-nearest") {
    const auto L = build_ring_k_nearest(10, 3);
    for (std::size_t i = 0; i < 10; ++i) CHECK(L(i, i) == 6.0);
    CHECK(L.edges().size() == 30);
    const Vector ref = oracle::ring_spectrum(10, 3);
    for (std::size_t i = 0; i < 10; ++i) CHECK(std::abs(L.spectrum().values[i] - ref[i]) <= 1e-9);
    CHECK(std::abs(L.algebraic_connectivity() - ref[1]) <= 1e-9);

    CHECK(build_ring_k_nearest(3, 1).algebraic_connectivity() == doctest::Approx(3.0));
    CHECK_THROWS_AS(build_ring_k_nearest(10, 5), ParameterError);
    CHECK_THROWS_AS(build_ring_k_nearest(10, 0), ParameterError);
    CHECK_THROWS_AS(build_ring_k_nearest(1, 1), ParameterError);
  }

  TEST_CASE("path") {
    const auto L2 = build_path(2);
    CHECK(L2.matrix() == Matrix{{1, -1}, {-1, 1}});
    CHECK(L2.algebraic_connectivity() == doctest::Approx(2.0));

    const auto L10 = build_path(10);
    const double s = std::sin(std::numbers::pi / 20.0);
    CHECK(L10.algebraic_connectivity() == doctest::Approx(4.0 * s * s).epsilon(1e-12));
    CHECK(L10.algebraic_connectivity() == doctest::Approx(0.0979).epsilon(1e-3));
    const Vector ref = oracle::path_spectrum(10);
    for (std::size_t i = 0; i < 10; ++i) CHECK(std::abs(L10.spectrum().values[i] - ref[i]) <= 1e-9);
    CHECK(L10.degree(0) == 1);
    CHECK(L10.degree(5) == 2);

    const Vector v3 = build_path(3).spectrum().values;
    CHECK(v3[0] == doctest::Approx(0.0));
    CHECK(v3[1] == doctest::Approx(1.0));
    CHECK(v3[2] == doctest::Approx(3.0));
    CHECK_THROWS_AS(build_path(1), ParameterError);
  }

  TEST_CASE("erdos-renyi") {
    const auto full = build_erdos_renyi(7, 1.0, 3);
    CHECK(full.laplacian.algebraic_connectivity() == doctest::Approx(7.0));
    CHECK(full.laplacian.edges().size() == 21);
    CHECK_THROWS_AS(build_erdos_renyi(2, 0.0, 1), ConnectivityError);
    CHECK_THROWS_AS(build_erdos_renyi(5, 1.5, 1), ParameterError);

    const auto g = build_erdos_renyi(50, 0.5, kRelaySeed);
    CHECK(g.retries == 0);
    const double l2 = g.laplacian.algebraic_connectivity();
    CHECK(l2 >= 10.0);
    CHECK(l2 <= 20.0);
    CHECK(l2 == doctest::Approx(kRelayLambda2).epsilon(1e-12));
    // Trace identity: Σλ = 2|E|.
    double sum = 0.0;
    for (double v : g.laplacian.spectrum().values) sum += v;
    CHECK(sum == doctest::Approx(2.0 * static_cast<double>(g.laplacian.edges().size())));

    const auto again = build_erdos_renyi(50, 0.5, kRelaySeed);
    CHECK(again.laplacian.matrix() == g.laplacian.matrix());
    CHECK(build_erdos_renyi(50, 0.5, kRelaySeed + 1).laplacian.matrix() != g.laplacian.matrix());
  }

  TEST_CASE("sparse erdos-renyi reports retries") {
    // p = 0.2 on 12 nodes is often disconnected; any accepted draw must be
    // connected, and the retry count tells how many draws were rejected.
    std::size_t total = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      try {
        const auto g = build_erdos_renyi(12, 0.2, seed);
        CHECK(g.laplacian.connected());
        total += g.retries;
      } catch (const ConnectivityError&) {
      }
    }
    CHECK(total > 0);
  }

  TEST_CASE("invariants hold on every construction") {
    std::vector<LaplacianMatrix> all{build_ring_k_nearest(10, 3), build_ring_k_nearest(7, 1), build_path(2),
                                     build_path(10), build_complete(5), build_erdos_renyi(50, 0.5, kRelaySeed).laplacian,
                                     build_erdos_renyi(20, 0.3, 9).laplacian,
                                     LaplacianMatrix::from_edges(4, std::vector<Edge>{{0, 1}, {2, 3}})};
    for (const auto& L : all) CHECK(testing::laplacian_violation(L) == "");
    for (std::size_t k = 0; k + 1 < all.size(); ++k) CHECK(all[k].connected());
    CHECK_FALSE(all.back().connected());
  }

  TEST_CASE("construction rejects bad input") {
    CHECK_THROWS_AS(LaplacianMatrix(Matrix{{1, -1}, {-1, 2}}), ParameterError);
    CHECK_THROWS_AS(LaplacianMatrix(Matrix{{2, -2}, {-2, 2}}), ParameterError);
    CHECK_THROWS_AS(LaplacianMatrix::from_edges(3, std::vector<Edge>{{0, 1}, {1, 0}}), ParameterError);
    CHECK_THROWS_AS(LaplacianMatrix::from_edges(3, std::vector<Edge>{{1, 1}}), ParameterError);
    CHECK_THROWS_AS(LaplacianMatrix::from_edges(3, std::vector<Edge>{{0, 3}}), ParameterError);
  }

  TEST_CASE("edge list round trip") {
    const auto L = build_erdos_renyi(15, 0.4, 5).laplacian;
    std::stringstream ss;
    write_edge_list(ss, L);
    const std::string text = ss.str();
    CHECK(text.rfind("N 15\n", 0) == 0);
    const auto back = read_edge_list(ss);
    CHECK(back.matrix() == L.matrix());
    std::stringstream bad("N 3\n0 5\n");
    CHECK_THROWS_AS(read_edge_list(bad), ParameterError);
  }
}
