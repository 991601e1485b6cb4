#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "pdm/errors.hpp"
#include "pdm/models.hpp"
#include "pdm/thresholds.hpp"

using namespace pdm;
using std::numbers::pi;

TEST_CASE("constants against the expression oracle") {
    for (double s : {0.25, 0.5, 1.0, 1.01, 1.5, 2.0, 3.5, 7.0}) {
        CHECK(constant_C(s) == doctest::Approx(oracle::formula_C(s)).epsilon(1e-12));
        for (double dr : {0.1, 0.7, 2.0, 10.0})
            CHECK(constant_C2(s, s + 0.5 + dr) == doctest::Approx(oracle::formula_C2(s, s + 0.5 + dr)).epsilon(1e-12));
    }
    // r - s - 1/2 = 1/2 < 7/8 * 5: C_2 = C / (1/2)^3
    CHECK(constant_C2(2.0, 3.0) == doctest::Approx(8 * constant_C(2.0)).epsilon(1e-14));
    CHECK(kC1 == 24305.0);
}

TEST_CASE("constants reject bad domains") {
    CHECK_THROWS_AS(constant_C(0.0), DomainError);
    CHECK_THROWS_AS(constant_C(-1.0), DomainError);
    CHECK_THROWS_AS(constant_C2(1.0, 1.5), DomainError);
    CHECK_THROWS_AS(constant_C2(1.0, 1.2), DomainError);
    CHECK_NOTHROW(constant_C2(1.0, 1.5 + 1e-9));
}

TEST_CASE("pure-point threshold") {
    const Theorem1Threshold t = theorem1_threshold(1.0, 1.5, 4.0, 2.0, 3.0);
    CHECK(t.terms[0].value == doctest::Approx(8.0 / kC1));
    CHECK(t.terms[1].value == doctest::Approx(1.0 / kC1));
    const double scale = (1.0 / constant_C2(1.5, 4.0)) * std::pow(3.0, 1.5);
    CHECK(t.terms[2].value == doctest::Approx(scale).epsilon(1e-12));
    CHECK(t.threshold == std::min({t.terms[0].value, t.terms[1].value, t.terms[2].value}));
    CHECK(t.measure_bound(0.0) == 1.0);
    CHECK(t.measure_bound(t.measure_scale) == doctest::Approx(0.0));
    CHECK(t.measure_bound(0.5 * t.measure_scale) == doctest::Approx(0.5));
    CHECK(t.omega_interval.first == doctest::Approx(8.0 / 9));
    CHECK(t.omega_interval.second == doctest::Approx(9.0 / 8));
    CHECK_THROWS_AS(theorem1_threshold(1.0, 1.5, 2.0, 2.0, 3.0), DomainError);
    CHECK_THROWS_AS(theorem1_threshold(-1.0, 1.5, 4.0, 2.0, 3.0), DomainError);
}

TEST_CASE("bounded-projection threshold") {
    const double w0 = 8 * std::sqrt(2.0) / 9, de = 4.0 / 7.0;
    const Theorem3Threshold t = theorem3_threshold(w0, 1.5, 4.0, 1.0, de, 0.3);
    CHECK(t.prefactor == doctest::Approx(1 / (2 * (1 + 8 * w0 / de))));
    CHECK(t.prefactor > 0.0);
    CHECK(t.prefactor <= 0.5);
    CHECK(t.c2_tilde == doctest::Approx(constant_C2(1.5, 3.0)));
    CHECK(t.terms[3].value == doctest::Approx(std::pow(2.0, -4.0) * (de + 8 * w0) / 4));
    double m = t.terms[0].value;
    for (const auto& x : t.terms) m = std::min(m, x.value);
    CHECK(t.threshold == doctest::Approx(t.prefactor * m));
    CHECK(t.auxiliary_bound == doctest::Approx(de / 8));
    CHECK(t.measure_bound(0.0) == 1.0);
    CHECK(t.measure_bound(t.prefactor * t.measure_scale) == doctest::Approx(0.0).scale(1.0));

    // rotor regime sigma = 1.01 needs r > 2.51
    CHECK_NOTHROW(theorem3_threshold(w0, 1.01, 2.51 + 1e-9, 1.0, de, 0.3));
    CHECK_THROWS_AS(theorem3_threshold(w0, 1.01, 2.4, 1.0, de, 0.3), DomainError);
    CHECK_THROWS_AS(theorem3_threshold(w0, 1.01, 2.51, 1.0, de, 0.3), DomainError);
}

TEST_CASE("relative bound") {
    // one block: ||V|| / dist(a, E_0) with E_0 = 0, a = -||V||
    auto one = oracle::scalar_space({0.0, 1e6}, {1, 1});
    CHECK(relative_bound(*one, 0.5, -0.5) == doctest::Approx(1.0 + 0.5 / (1e6 + 0.5)));

    // rotor, a = -1: sum_{n>=0} 1/(n^2+1) = (1 + pi coth pi) / 2
    auto s = rotor_space(40);
    const RelativeBound b = relative_bound_enclosure(*s, 1.0, -1.0, delta_rotor_tail());
    CHECK(b.tail_certified);
    CHECK(b.value.contains((1 + pi / std::tanh(pi)) / 2));
    CHECK(b.value.width() < 1e-6);
    const RelativeBound h = relative_bound_enclosure(*s, 1.0, -1.0);
    CHECK_FALSE(h.tail_certified);
    CHECK(h.head == doctest::Approx(b.head));

    // decreasing in |a|, tending to zero
    double prev = relative_bound(*s, 1.0, -0.5, delta_rotor_tail());
    for (double a : {-1.0, -10.0, -100.0, -1e4, -1e8}) {
        const double now = relative_bound(*s, 1.0, a, delta_rotor_tail());
        CHECK(now < prev);
        prev = now;
    }
    CHECK(prev < 1e-3);
    CHECK_THROWS_AS(relative_bound(*s, 1.0, 0.5), DomainError);
    CHECK_THROWS_AS(relative_bound(*s, 1.0, 0.0), DomainError);
}

TEST_CASE("report for the driven rotor") {
    const Model m = delta_rotor(30, 0.02, {{1, 0.5}, {-1, 0.5}});
    const double w0 = 8 * std::sqrt(2.0) / 9;
    const ThresholdReport r = threshold_report(*m.space, m.v, w0, 1.5, 3.1, delta_rotor_tail());
    CHECK(r.certified);
    CHECK(r.delta_e <= 4.0 / 7.0 * (1 + 1e-9));
    CHECK(r.delta_e == doctest::Approx(4.0 / 7.0).epsilon(1e-6));
    // (1,1) block of delta has norm 1/pi; two harmonics of weight 1/2
    CHECK(r.v_triple_r == doctest::Approx(0.02 / pi).epsilon(1e-12));
    REQUIRE(r.theorem1);
    REQUIRE(r.theorem3);
    CHECK(r.c1 == kC1);
    CHECK_FALSE(r.all_pass());
    REQUIRE(r.first_failure());
    CHECK(r.first_failure()->value > r.first_failure()->bound);
    CHECK_FALSE(r.theorem1_measure);

    // r too small for the second family of conditions
    const ThresholdReport low = threshold_report(*m.space, m.v, w0, 1.5, 2.9, delta_rotor_tail());
    CHECK(low.theorem1);
    CHECK_FALSE(low.theorem3);
    CHECK_FALSE(low.theorem3_skipped.empty());
}

TEST_CASE("slowly converging gap sums stay uncertified") {
    // sigma = 1.01: the remainder falls like N^{-0.01}, out of reach of the integral comparison
    const Model m = delta_rotor(30, 0.02, {{1, 0.5}, {-1, 0.5}});
    const ThresholdReport r = threshold_report(*m.space, m.v, 1.0, 1.01, 2.6, delta_rotor_tail());
    CHECK_FALSE(r.certified);
    CHECK(r.theorem3);
}

TEST_CASE("tiny coupling passes every condition") {
    const Model m = delta_rotor(10, 1e-14, {{1, 0.5}, {-1, 0.5}});
    const ThresholdReport r = threshold_report(*m.space, m.v, 8 * std::sqrt(2.0) / 9, 1.5, 3.1, delta_rotor_tail());
    CHECK(r.all_pass());
    REQUIRE(r.theorem1_measure);
    CHECK(*r.theorem1_measure > 0.99);
    REQUIRE(r.theorem3_measure);
    CHECK(*r.theorem3_measure <= 1.0);
}

TEST_CASE("rotor-like inputs at small omega_0 are limited by C_1") {
    // omega_0 / C_1 meets (omega_0 / C_2)(D / omega_0)^s at omega_0 = (C_1 / C_2)^{1/s} D
    for (double s : {1.01, 1.05, 1.2}) {
        const double r = s + 1.0, d = 1.0;
        const double cross = std::pow(kC1 / constant_C2(s, r), 1.0 / s) * d;
        for (double f : {1e-3, 0.1, 0.5}) {
            const Theorem1Threshold t = theorem1_threshold(f * cross, s, r, 1.0, d);
            CHECK(t.threshold == t.terms[1].value);
        }
        const Theorem1Threshold above = theorem1_threshold(2 * cross, s, r, 1.0, d);
        CHECK(above.threshold == above.terms[2].value);
    }
}
