#include <doctest.h>

#include "oracles.hpp"
#include "pdm/errors.hpp"
#include "pdm/gaps.hpp"
#include "pdm/models.hpp"

using namespace pdm;

TEST_CASE("two scalar blocks") {
    auto s = oracle::scalar_space({0.0, 4.0}, {1, 1});
    const GapReport g = gap_report(*s, 2.0);
    CHECK(g.smallest_gap == 4.0);
    CHECK(g.inverse_gap_sum_head == 0.25);
    CHECK_FALSE(g.tail_certified);
    CHECK_FALSE(g.inverse_gap_sum.finite());
}

TEST_CASE("degenerate blocks are a singular gap") {
    auto s = oracle::scalar_space({0.0, 1.0, 1.0}, {1, 1, 1});
    CHECK_THROWS_AS(gap_report(*s, 2.0), SingularGapError);
}

TEST_CASE("rotor inverse gap sum is seven quarters") {
    for (int n : {10, 30, 200}) {
        const GapReport g = gap_report(*rotor_space(n), 1.5, delta_rotor_tail());
        CHECK(g.tail_certified);
        CHECK(g.inverse_gap_argmax == 1);
        CHECK(g.inverse_gap_sum_head == doctest::Approx(oracle::rotor_row_one(n)).epsilon(1e-14));
        CHECK(g.inverse_gap_sum.contains(1.75));
        CHECK(g.inverse_gap_sum.width() <= 1e-6);
    }
}

TEST_CASE("pairwise gaps and per-block gaps") {
    std::mt19937_64 rng(17);
    std::vector<Matrix> e;
    for (int n = 0; n < 5; ++n) e.push_back(oracle::random_hermitian(rng, 1 + n % 3, 0.2) + Matrix::Identity(1 + n % 3, 1 + n % 3) * Complex(3.0 * n));
    auto s = make_space(e);
    const GapReport g = gap_report(*s, 2.0);
    double smallest = INFINITY;
    for (int m = 0; m < 5; ++m) {
        double row = INFINITY;
        for (int n = 0; n < 5; ++n) {
            if (m == n) continue;
            const double d = oracle::brute_distance(e[m], e[n]);
            CHECK(g.pairwise_gap(m, n) == doctest::Approx(d).epsilon(1e-12));
            row = std::min(row, d);
        }
        CHECK(g.per_block_gap[m] == doctest::Approx(row).epsilon(1e-12));
        smallest = std::min(smallest, row);
    }
    CHECK(g.smallest_gap == doctest::Approx(smallest).epsilon(1e-12));
}

TEST_CASE("top d=2 sigma sum has a tight tail") {
    const GapReport g = gap_report(quantum_top_spectra(2, 200), 3.5, quantum_top_tail(2));
    CHECK(g.tail_certified);
    CHECK_FALSE(g.sigma_gap_divergent);
    REQUIRE(g.sigma_gap_sum.finite());
    // The remainder itself is ~ N^{-1/2}; what must be tight is its enclosure.
    CHECK(g.sigma_gap_sum.width() < 1e-3 * g.sigma_gap_sum_head);
    CHECK(g.sigma_gap_sum.lower >= g.sigma_gap_sum_head);
}

TEST_CASE("enclosures bound every finer truncation") {
    for (int n : {20, 40}) {
        const GapReport coarse = gap_report(*rotor_space(n), 1.5, delta_rotor_tail());
        const GapReport fine = gap_report(*rotor_space(2 * n), 1.5, delta_rotor_tail());
        CHECK(fine.inverse_gap_sum_head >= coarse.inverse_gap_sum_head);
        CHECK(fine.sigma_gap_sum_head >= coarse.sigma_gap_sum_head);
        CHECK(fine.inverse_gap_sum_head <= coarse.inverse_gap_sum.upper);
        CHECK(fine.sigma_gap_sum_head <= coarse.sigma_gap_sum.upper);
    }
}

TEST_CASE("divergent sigma sum is flagged, not thrown") {
    const GapReport g = gap_report(*rotor_space(20), 1.0, delta_rotor_tail());
    CHECK(g.sigma_gap_divergent);
    CHECK_FALSE(g.sigma_gap_sum.finite());
}

TEST_CASE("sigma must be positive") { CHECK_THROWS_AS(gap_report(*rotor_space(5), 0.0), DomainError); }
