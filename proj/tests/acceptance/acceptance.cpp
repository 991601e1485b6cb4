// One line per acceptance criterion; exit status is the number of failures.
#include <chrono>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "pdm/commutator.hpp"
#include "pdm/errors.hpp"
#include "pdm/floquet.hpp"
#include "pdm/majorant.hpp"
#include "pdm/models.hpp"
#include "pdm/pdm.hpp"
#include "pdm/thresholds.hpp"

using namespace pdm;
using std::numbers::pi;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;
    void require(bool ok, const std::string& what) {
        if (!ok) {
            if (pass) detail = what;
            pass = false;
        }
    }
};

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// every converged static run, for the majorant criterion
std::vector<PdmResult> g_runs;

double dense_spectrum_error(const SpacePtr& s, const BlockOperator& v, const BlockOperator& g) {
    const Matrix h0 = oracle::dense_h0(*s);
    const auto a = oracle::eigenvalues(h0 + oracle::dense(g));
    const auto b = oracle::eigenvalues(h0 + oracle::dense(v));
    double dev = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) dev = std::max(dev, std::abs(a(i) - b(i)) / std::max(1.0, std::abs(b(i))));
    return dev;
}

double dense_reconstruction(const SpacePtr& s, const PdmResult& r, const BlockOperator& v) {
    const Matrix h0 = oracle::dense_h0(*s);
    const Matrix j = oracle::dense(r.j);
    return oracle::svd_norm(j * (h0 + oracle::dense(r.g)) * j.adjoint() - h0 - oracle::dense(v));
}

Verdict reconstruction() {
    Verdict out;
    const auto t0 = std::chrono::steady_clock::now();
    auto s = rotor_space(30);
    const PdmProblem p = PdmProblem::from_space(s);
    const double g = pi * p.delta_e() / 10;
    const BlockOperator v = g * delta_operator(s);
    const PdmResult r = pdm_run(p, v);
    const double spec = dense_spectrum_error(s, v, r.g);
    const double rec = dense_reconstruction(s, r, v);
    const double dt = seconds_since(t0);
    out.require(r.trace.back().v_norm < 1e-12 * p.delta_e(), "stopping tolerance not reached");
    out.require(r.certificate.iterations <= 15, "more than 15 steps");
    out.require(spec <= 1e-8, "spectrum mismatch");
    out.require(rec <= 1e-8, "reconstruction residual");
    out.require(dt <= 10.0, "runtime above 10 s");
    out.detail += fmt("steps %.0f, spectrum %.2e, residual %.2e", r.certificate.iterations, spec, rec) + fmt(", %.2f s", dt);
    g_runs.push_back(r);
    return out;
}

void check_certificate(Verdict& out, const PdmResult& r, const std::string& label) {
    const PdmCertificate& c = r.certificate;
    out.require(c.j_sh_ok(), label + ": ||J||_SH");
    out.require(c.g_norm_ok(), label + ": ||G||");
    out.require(c.gaps_ok(), label + ": gap preservation");
    out.require(std::isfinite(c.commutator_regularity), label + ": [H0,J]");
    out.require(c.unitarity_defect <= 1e-10, label + ": unitarity");
}

Verdict certificates() {
    Verdict out;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> frac(0.05, 0.95);
    int runs = 0;
    auto go = [&](const SpacePtr& s, const BlockOperator& v, const std::string& label) {
        const PdmResult r = pdm_run(s, v);
        check_certificate(out, r, label);
        g_runs.push_back(r);
        ++runs;
    };
    for (int n : {10, 30}) {
        auto s = rotor_space(n);
        const PdmProblem p = PdmProblem::from_space(s);
        for (double f : {0.1, 0.5, 0.9})
            go(s, (f * pi * p.delta_e() / 8) * delta_operator(s), "rotor N=" + std::to_string(n));
    }
    for (int d : {1, 2}) {
        auto s = quantum_top(d, 15);
        const PdmProblem p = PdmProblem::from_space(s);
        for (int t = 0; t < 3; ++t)
            go(s, oracle::random_symmetric(rng, s, frac(rng) * p.delta_e() / 8), "top d=" + std::to_string(d));
    }
    for (int t = 0; t < 50; ++t) {
        std::vector<Matrix> e;
        const int nb = 3 + t % 6;
        double base = 0.0;
        for (int n = 0; n < nb; ++n) {
            const int dim = 1 + (n * 7 + t) % 4;
            base += 1.0 + 3.0 * n;
            e.push_back(oracle::random_hermitian(rng, dim, 0.1) + Matrix::Identity(dim, dim) * Complex(base));
        }
        auto s = make_space(e);
        const PdmProblem p = PdmProblem::from_space(s);
        go(s, oracle::random_symmetric(rng, s, frac(rng) * p.delta_e() / 8), "random model " + std::to_string(t));
    }
    out.detail = std::to_string(runs) + " runs" + (out.pass ? ", no violations" : ", first violation: " + out.detail);
    return out;
}

Verdict scalar_constants() {
    Verdict out;
    const auto t0 = std::chrono::steady_clock::now();
    const ScalarConstantReport r = verify_scalar_constants();
    const oracle::WideMajorant w = oracle::wide_majorant(oracle::wide_pi() / 8);
    const oracle::Wide margin = oracle::Wide(0.25) - w.sum_x_phi / oracle::wide_pi();
    out.require(r.margin_holds && margin >= oracle::Wide("0.13"), "margin");
    out.require(r.exp_bound_holds && exp(w.sum_x_phi) <= oracle::Wide(1.5), "exp bound");
    out.require(r.g_chain_holds, "G chain");
    out.require(r.jdot_holds, "J' factor");
    const double dt = seconds_since(t0);
    out.require(dt < 1.0, "runtime");
    out.detail += fmt("margin %.6f, exp %.6f, ", r.margin, r.exp_sum_x_phi) + fmt("G chain %.6f, J' factor %.6f", r.g_chain, r.jdot);
    return out;
}

Verdict rotor_closed_forms() {
    Verdict out;
    auto s = rotor_space(30);
    const BlockOperator d = delta_operator(s);
    out.require(std::abs(norm_inf1(d) - 1 / pi) <= 1e-14, "||delta||");
    const GapReport g = gap_report(*s, 1.5, delta_rotor_tail());
    out.require(g.inverse_gap_sum.contains(1.75) && g.inverse_gap_sum.width() <= 1e-6, "1/Delta E");
    const double b00 = spectral_norm(*d.find(0, 0)), b10 = spectral_norm(*d.find(1, 0)), b11 = spectral_norm(*d.find(1, 1));
    out.require(std::abs(b00 - 1 / (2 * pi)) <= 1e-14, "P0 delta P0");
    out.require(std::abs(b10 - 1 / (std::sqrt(2.0) * pi)) <= 1e-14, "P1 delta P0");
    out.require(std::abs(b11 - 1 / pi) <= 1e-14, "P1 delta P1");
    out.detail += fmt("1/Delta E in [%.12f, %.12f], ", g.inverse_gap_sum.lower, g.inverse_gap_sum.upper) +
                  fmt("blocks %.15f %.15f %.15f", b00, b10, b11);
    return out;
}

Verdict sylvester() {
    Verdict out;
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> dim(1, 8);
    double worst = 0.0, worst_res = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const int p = dim(rng), q = dim(rng);
        Matrix a = oracle::random_hermitian(rng, p), b = oracle::random_hermitian(rng, q);
        // shift B until the spectra sit at least 0.1 apart
        b += Matrix::Identity(q, q) * Complex(0.1 + oracle::eigenvalues(a).maxCoeff() - oracle::eigenvalues(b).minCoeff());
        if (t % 2) std::swap(a, b);
        const Matrix y = oracle::random_matrix(rng, static_cast<int>(a.rows()), static_cast<int>(b.rows()));
        const SylvesterSolution s = solve_sylvester(a, b, y);
        const double dist = oracle::brute_distance(a, b);
        const double ratio = oracle::svd_norm(s.x) / ((pi / 2) * oracle::svd_norm(y) / dist);
        const double res = oracle::svd_norm(a * s.x - s.x * b - y) / oracle::svd_norm(y);
        worst = std::max(worst, ratio);
        worst_res = std::max(worst_res, res);
        out.require(dist >= 0.1 - 1e-12, "distance");
    }
    const double dt = seconds_since(t0);
    out.require(worst <= 1.0, "bound");
    out.require(worst_res <= 1e-10, "residual");
    out.require(dt <= 5.0, "runtime");
    out.detail += fmt("max ||X||/bound %.4f, max residual %.2e, %.2f s", worst, worst_res, dt);
    return out;
}

Verdict majorant() {
    Verdict out;
    double worst_ratio = 1e300;
    int samples = 0;
    for (const PdmResult& r : g_runs) {
        out.require(r.certificate.majorant_dominates, "majorant domination");
        for (const auto& t : r.trace)
            out.require(t.x_actual <= r.majorant.at(t.step) * (1 + 1e-12) + t.x_floor, "x_s above the majorant");
        out.require(r.certificate.superexponential_ok(), "super-exponential ratio");
        if (r.certificate.superexponential_samples > 0) {
            worst_ratio = std::min(worst_ratio, r.certificate.superexponential_ratio);
            samples += r.certificate.superexponential_samples;
        }
    }
    out.detail += std::to_string(g_runs.size()) + " runs, " + std::to_string(samples) + " ratio samples" +
                  fmt(", min ratio %.3f", samples ? worst_ratio : 0.0);
    return out;
}

Verdict time_dependent() {
    Verdict out;
    const auto t0 = std::chrono::steady_clock::now();
    const double omega = std::sqrt(2.0), r = 2.6;
    const Model m = delta_rotor(12, 0.031161, {{1, 0.5}, {-1, 0.5}});
    const RegularizedPerturbation p = time_dependent_pdm(m.space, m.v, omega, r);
    out.require(p.weighted_v <= p.delta_e / 8, "|||w_r V|||_0 above Delta E / 8");
    out.require(p.v_tilde_ok(), "V~ bound");
    out.require(p.reconstruction_residual <= 1e-6, "reconstruction");
    const QuasiEnergyComparison q = compare_quasi_energies(*m.space, m.v, p.v_tilde, omega, 8);
    out.require(q.compared > 0 && q.max_deviation <= 1e-6, "quasi-energies");
    const double dt = seconds_since(t0);
    out.require(dt <= 60.0, "runtime");
    out.detail += fmt("V~ %.4e <= %.4e, residual %.2e, ", p.v_tilde_norm, p.v_tilde_bound, p.reconstruction_residual) +
                  fmt("quasi-energies %.2e over %.0f, %.1f s", q.max_deviation, q.compared, dt);
    return out;
}

Verdict sigma_boundary() {
    Verdict out;
    for (int d : {1, 2}) {
        const SigmaVerdict below = sigma_condition_top(d, 2.0 * d - 1, 32);
        const SigmaVerdict above = sigma_condition_top(d, 2.0 * d - 0.5, 32);
        out.require(below.empirical_divergent && below.certified_divergent, "divergence not flagged at d=" + std::to_string(d));
        out.require(!above.empirical_divergent && above.tail_stable, "convergence not stable at d=" + std::to_string(d));
        out.detail += fmt("d=%.0f ratios %.3f / %.3f; ", d, below.ratio_next, above.ratio_next);
    }
    return out;
}

Verdict threshold_formulas() {
    Verdict out;
    double worst = 0.0;
    auto rel = [&](double a, double b) { worst = std::max(worst, std::abs(a - b) / std::abs(b)); };
    for (double s : {0.5, 1.01, 1.5, 2.0, 3.5}) {
        rel(constant_C(s), oracle::formula_C(s));
        for (double r : {s + 0.6, s + 1.6, s + 4.0}) {
            rel(constant_C2(s, r), oracle::formula_C2(s, r));
            const double w0 = 1.1, d0 = 1.0, de = 0.57, des = 0.2;
            std::map<std::string, oracle::Wide> vars{{"s", oracle::Wide(s)}, {"r", oracle::Wide(r)}, {"w", oracle::Wide(w0)},
                                                     {"D0", oracle::Wide(d0)}, {"DE", oracle::Wide(de)}, {"DS", oracle::Wide(des)}};
            vars["C"] = oracle::Wide(oracle::eval(oracle::kFormulaC, vars));
            const oracle::Wide c2 = oracle::Wide(oracle::eval(oracle::kFormulaC2, vars));
            vars["C2"] = c2;
            const double t1 = oracle::eval("min(min(4*D0/24305, w/24305), (w/C2)*(DS/w)^s)", vars);
            rel(theorem1_threshold(w0, s, r, d0, des).threshold, t1);
            if (r > s + 1.5) {
                std::map<std::string, oracle::Wide> v3 = vars;
                v3["r"] = oracle::Wide(r - 1);
                v3["C2"] = oracle::Wide(oracle::eval(oracle::kFormulaC2, v3));
                v3["r"] = oracle::Wide(r);
                const double t3 = oracle::eval(
                    "1/(2*(1+8*w/DE))*min(min(4*D0/24305, w/24305), min((w/C2)*(DS/w)^s, 2^(-r)*(DE+8*w)/4))", v3);
                rel(theorem3_threshold(w0, s, r, d0, de, des).threshold, t3);
            }
        }
    }
    out.require(worst <= 1e-12, "relative error");
    out.require(kC1 == 24305.0, "C_1");
    out.detail += fmt("max relative error %.2e, C_1 = %.0f", worst, kC1);
    return out;
}

Verdict stability() {
    Verdict out;
    const double omega = std::sqrt(2.0);
    const int n0 = 12, cutoff = n0 / 2;
    double sups[2] = {0, 0};
    for (int i = 0; i < 2; ++i) {
        const Model m = delta_rotor(n0 * (i + 1), 0.031161, {{1, 0.5}, {-1, 0.5}});
        Vector psi = Vector::Zero(m.space->total_dim());
        for (int b = 0; b < n0; ++b) psi.segment(m.space->offset(b), m.space->dim(b)).setConstant(1.0 / (1 + b));
        psi.normalize();
        PropagatorOptions o;
        o.record_every = 64;
        const PropagatorState s = simulate_propagator(*m.space, m.v, omega, psi, 100 * 2 * pi / omega, o);
        out.require(s.tail_sup[cutoff] <= 2 * s.tail_initial[cutoff], "tail growth");
        out.require(s.max_norm_drift <= 1e-6, "norm drift");
        sups[i] = s.tail_sup[cutoff];
        if (i == 0) out.detail += fmt("tail sup/initial %.4f, drift %.1e, ", s.tail_sup[cutoff] / s.tail_initial[cutoff], s.max_norm_drift);
    }
    const double dis = std::abs(sups[1] - sups[0]) / sups[0];
    out.require(dis <= 0.1, "truncation disagreement");
    out.detail += fmt("N vs 2N %.2e", dis);
    return out;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"reconstruction against the dense oracle", reconstruction},
        {"certificates on the test matrix", certificates},
        {"scalar constants at x1 = pi/8", scalar_constants},
        {"delta rotor closed forms", rotor_closed_forms},
        {"commutator bound on random pairs", sylvester},
        {"majorant domination", majorant},
        {"time-dependent pipeline", time_dependent},
        {"sigma boundary of the top", sigma_boundary},
        {"threshold formulas", threshold_formulas},
        {"stability proxy", stability},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail = std::string("exception: ") + e.what();
        }
        failures += !v.pass;
        std::printf("%s %2zu %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), v.detail.c_str());
        std::fflush(stdout);
    }
    return failures;
}
