#include <doctest.h>

#include <numbers>
#include <sstream>

#include <boost/math/special_functions/binomial.hpp>

#include "oracles.hpp"
#include "pdm/errors.hpp"
#include "pdm/models.hpp"
#include "pdm/pdm.hpp"

using namespace pdm;
using std::numbers::pi;

namespace {

double binom(int n, int k) {
    if (n < k || n < 0) return 0.0;
    return boost::math::binomial_coefficient<double>(static_cast<unsigned>(n), static_cast<unsigned>(k));
}

ModelSpec parse(const std::string& text) {
    std::istringstream in(text);
    return read_model(in);
}

}  // namespace

TEST_CASE("top multiplicities match the harmonic count") {
    for (int d = 1; d <= 5; ++d)
        for (int n = 0; n < 40; ++n) CHECK(top_multiplicity(d, n) == binom(n + d, d) - binom(n + d - 2, d));
    CHECK(top_multiplicity(2, 3) == 7);
    CHECK(top_multiplicity(3, 2) == 9);
    // M_n ~ 2 n^{d-1} / (d-1)!
    CHECK(top_multiplicity(3, 100000) / (2.0 * 1e10 / 2.0) == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("top spaces and their tails") {
    auto s = quantum_top(2, 6);
    CHECK(s->block_count() == 6);
    for (int n = 0; n < 6; ++n) {
        CHECK(s->dim(n) == 2 * n + 1);
        CHECK(s->spectrum(n)(0) == n * (n + 1));
    }
    const auto spectra = quantum_top_spectra(2, 6);
    CHECK(spectra.size() == 6);
    CHECK(spectra[5].size() == 11);
    for (int d = 1; d <= 3; ++d) {
        const TailModel t = quantum_top_tail(d);
        for (int n = 2; n < 30; ++n) {
            CHECK(t.energy(n) == doctest::Approx(n * (n + d - 1.0)));
            CHECK(t.multiplicity(n) == doctest::Approx(top_multiplicity(d, n)));
        }
    }
    CHECK_THROWS_AS(quantum_top(0, 5), DomainError);
    CHECK_THROWS_AS(quantum_top(3, 400, 1000), DomainError);
}

TEST_CASE("delta rotor blocks") {
    auto s = rotor_space(8);
    CHECK(s->dim(0) == 1);
    for (int n = 1; n < 8; ++n) {
        CHECK(s->dim(n) == 2);
        CHECK(s->spectrum(n)(0) == n * n);
    }
    const BlockOperator d = delta_operator(s);
    for (const auto& [key, b] : d.entries()) CHECK((b.array() == Complex(1 / (2 * pi))).all());
    CHECK(norm_inf1(d) == doctest::Approx(1 / pi).epsilon(1e-14));
    const TailModel t = delta_rotor_tail();
    CHECK(t.energy(9) == 81);
    CHECK(t.multiplicity(9) == 2);
}

TEST_CASE("rotor inverse gap sum") {
    // row m = 1 carries the largest sum, approaching 7/4
    for (int n : {10, 30, 100}) {
        const GapReport r = gap_report(*rotor_space(n), 1.5);
        CHECK(r.inverse_gap_sum_head == doctest::Approx(oracle::rotor_row_one(n)).epsilon(1e-13));
    }
    const GapReport c = gap_report(*rotor_space(30), 1.5, delta_rotor_tail());
    CHECK(c.inverse_gap_sum.contains(1.75));
    CHECK(c.inverse_gap_sum.width() < 1e-6);
}

TEST_CASE("built rotor model") {
    const Model m = delta_rotor(5, 0.2, {{1, Complex(0.5, 0)}, {-1, Complex(0.5, 0)}});
    CHECK(m.v.max_frequency() == 1);
    CHECK(m.v.is_symmetric());
    CHECK(norm_inf1(m.v.coefficient(1)) == doctest::Approx(0.1 / pi).epsilon(1e-14));
    CHECK(m.spec.k_max >= 1);

    ModelSpec bad;
    bad.truncation = 4;
    bad.fhat = {{1, Complex(1, 0)}};
    CHECK_THROWS_AS(build_model(bad), IngestError);
}

TEST_CASE("model files round trip bit for bit") {
    const Model m = delta_rotor(6, 0.0371, {{1, Complex(0.5, 0.1)}, {-1, Complex(0.5, -0.1)}, {2, Complex(0, 0.25)}, {-2, Complex(0, -0.25)}});
    const ModelSpec custom = to_custom_spec(*m.space, m.v, delta_rotor_tail());
    std::ostringstream out;
    write_model(out, custom);
    const ModelSpec back = parse(out.str());
    const Model b = build_model(back);
    REQUIRE(b.space->same_layout(*m.space));
    for (int n = 0; n < m.space->block_count(); ++n) CHECK((b.space->energy(n) - m.space->energy(n)).cwiseAbs().maxCoeff() == 0.0);
    for (int k = -2; k <= 2; ++k)
        CHECK((oracle::dense(b.v.coefficient(k)) - oracle::dense(m.v.coefficient(k))).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(b.tail);
    CHECK((*b.tail).energy(7.5) == 56.25);

    std::ostringstream again;
    write_model(again, back);
    CHECK(again.str() == out.str());
}

TEST_CASE("a two-block file reproduces the closed form") {
    const ModelSpec s = parse(R"(# two levels
kind custom
N 2
block 0 1
0 0
block 1 1
4 0
coupling 0 1 0 1 1
0.3 0
coupling 0 0 1 1 1
0.3 0
)");
    const Model m = build_model(s);
    const PdmResult r = pdm_run(m.space, m.v.coefficient(0));
    CHECK(r.g.find(0, 0)->coeff(0, 0).real() == doctest::Approx(2 - std::sqrt(4.09)).epsilon(1e-12));
}

TEST_CASE("malformed files name the line") {
    SUBCASE("asymmetric coupling names (k,m,n)") {
        try {
            parse("kind custom\nN 2\nblock 0 1\n0 0\nblock 1 1\n4 0\ncoupling 1 1 0 1 1\n0.3 0\n");
            FAIL("expected rejection");
        } catch (const IngestError& e) {
            CHECK(std::string(e.what()).find("(1,1,0)") != std::string::npos);
            CHECK(e.line() == 7);
        }
    }
    SUBCASE("non-Hermitian block") {
        try {
            parse("kind custom\nN 2\nblock 0 2\n0 0 1 0\n0 0 0 0\nblock 1 1\n4 0\n");
            FAIL("expected rejection");
        } catch (const IngestError& e) {
            CHECK(e.line() == 3);
        }
    }
    SUBCASE("unknown key") {
        try {
            parse("kind delta_rotor\nN 4\nfrobnicate 3\n");
            FAIL("expected rejection");
        } catch (const IngestError& e) {
            CHECK(e.line() == 3);
        }
    }
    SUBCASE("short row") {
        CHECK_THROWS_AS(parse("kind custom\nN 2\nblock 0 1\n0\n"), IngestError);
    }
    SUBCASE("bad omega") {
        CHECK_THROWS_AS(parse("kind delta_rotor\nN 4\nomega -1\n"), IngestError);
    }
    SUBCASE("extra keys go to the handler") {
        std::istringstream in("kind delta_rotor\nN 4\nseed 7\n");
        int seen = 0;
        read_model(in, [&](const std::string& key, const std::vector<std::string>& args, int line) {
            seen = key == "seed" && args.size() == 1 && line == 3;
            return true;
        });
        CHECK(seen == 1);
    }
}

TEST_CASE("sigma condition on the top") {
    for (int d : {1, 2}) {
        const SigmaVerdict below = sigma_condition_top(d, 2.0 * d - 1, 16);
        CHECK_FALSE(below.analytic_converges);
        CHECK(below.empirical_divergent);
        CHECK(below.certified_divergent);
        CHECK(below.consistent());

        const SigmaVerdict above = sigma_condition_top(d, 2.0 * d - 1 + 0.5, 16);
        CHECK(above.analytic_converges);
        CHECK_FALSE(above.empirical_divergent);
        CHECK(above.tail_stable);
        CHECK(above.consistent());
    }
    CHECK(sigma_condition_top(1, 1.5, 16).consistent());
    CHECK(sigma_condition_top(2, 3.0, 16).consistent());
}

TEST_CASE("top gap sum enclosure at large truncation") {
    const GapReport r = gap_report(quantum_top_spectra(2, 200), 3.5, quantum_top_tail(2));
    REQUIRE(r.sigma_gap_sum.finite());
    CHECK(r.sigma_gap_sum.width() < 1e-3 * r.sigma_gap_sum_head);
    CHECK(r.sigma_gap_sum.lower >= r.sigma_gap_sum_head);
}
