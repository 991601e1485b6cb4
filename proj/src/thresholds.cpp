#include "pdm/thresholds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "pdm/errors.hpp"
#include "pdm/pdm.hpp"

namespace pdm {

namespace {

using Wide = boost::multiprecision::cpp_bin_float_50;

Wide wide_C(const Wide& sigma) {
    using boost::multiprecision::exp;
    using boost::multiprecision::pow;
    const Wide a = 2 * sigma + 1;
    const Wide e = boost::math::constants::e<Wide>();
    const Wide pi = boost::math::constants::pi<Wide>();
    const Wide base = 2 * a / (e * (1 - exp(Wide(-4) / a)));
    return 25223 * pi * a * a * a * pow(base, sigma + Wide(0.5));
}

Wide wide_C2(const Wide& sigma, const Wide& r) {
    const Wide gap = r - sigma - Wide(0.5);
    if (!(gap > 0)) throw DomainError("C_2(sigma, r) needs r > sigma + 1/2");
    const Wide cap = Wide(7) / 8 * (2 * sigma + 1);
    const Wide m = gap < cap ? gap : cap;
    return wide_C(sigma) / (m * m * m);
}

void check_common(double omega0, double sigma, double delta0, double delta_e_sigma) {
    if (!(omega0 > 0.0)) throw DomainError("omega_0 must be positive");
    if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
    if (!(delta0 > 0.0)) throw DomainError("Delta_0 must be positive");
    if (!(delta_e_sigma > 0.0)) throw DomainError("Delta E_sigma must be positive");
}

double sigma_term(double omega0, double c2, double delta_e_sigma, double sigma) {
    using boost::multiprecision::pow;
    const Wide w0(omega0);
    return static_cast<double>(w0 / Wide(c2) * pow(Wide(delta_e_sigma) / w0, Wide(sigma)));
}

}  // namespace

double constant_C(double sigma) {
    if (!(sigma > 0.0)) throw DomainError("C(sigma) needs sigma > 0");
    return static_cast<double>(wide_C(Wide(sigma)));
}

double constant_C2(double sigma, double r) {
    if (!(sigma > 0.0)) throw DomainError("C_2(sigma, r) needs sigma > 0");
    if (!(r > sigma + 0.5)) throw DomainError("C_2(sigma, r) needs r > sigma + 1/2");
    return static_cast<double>(wide_C2(Wide(sigma), Wide(r)));
}

std::pair<double, double> frequency_interval(double omega0) { return {8.0 * omega0 / 9.0, 9.0 * omega0 / 8.0}; }

Theorem1Threshold theorem1_threshold(double omega0, double sigma, double r, double delta0, double delta_e_sigma) {
    check_common(omega0, sigma, delta0, delta_e_sigma);
    if (!(r > sigma + 0.5)) throw DomainError("theorem1_threshold needs r > sigma + 1/2");
    Theorem1Threshold t;
    t.omega0 = omega0;
    t.sigma = sigma;
    t.r = r;
    t.delta0 = delta0;
    t.delta_e_sigma = delta_e_sigma;
    t.c = constant_C(sigma);
    t.c2 = constant_C2(sigma, r);
    t.measure_scale = sigma_term(omega0, t.c2, delta_e_sigma, sigma);
    t.terms = {ThresholdTerm{"gap", "4 Delta_0 / C_1", 4.0 * delta0 / kC1},
               ThresholdTerm{"frequency", "omega_0 / C_1", omega0 / kC1},
               ThresholdTerm{"growing_gap", "(omega_0 / C_2)(Delta E_sigma / omega_0)^sigma", t.measure_scale}};
    t.threshold = std::min({t.terms[0].value, t.terms[1].value, t.terms[2].value});
    t.omega_interval = frequency_interval(omega0);
    return t;
}

Theorem3Threshold theorem3_threshold(double omega0, double sigma, double r, double delta0, double delta_e,
                                     double delta_e_sigma) {
    check_common(omega0, sigma, delta0, delta_e_sigma);
    if (!(delta_e > 0.0)) throw DomainError("Delta E must be positive");
    if (!(r > sigma + 1.5)) throw DomainError("theorem3_threshold needs r > sigma + 3/2");
    Theorem3Threshold t;
    t.omega0 = omega0;
    t.sigma = sigma;
    t.r = r;
    t.delta0 = delta0;
    t.delta_e = delta_e;
    t.delta_e_sigma = delta_e_sigma;
    t.c = constant_C(sigma);
    t.c2_tilde = constant_C2(sigma, r - 1.0);
    t.prefactor = 1.0 / (2.0 * (1.0 + 8.0 * omega0 / delta_e));
    t.measure_scale = sigma_term(omega0, t.c2_tilde, delta_e_sigma, sigma);
    t.terms = {ThresholdTerm{"gap", "4 Delta_0 / C_1", 4.0 * delta0 / kC1},
               ThresholdTerm{"frequency", "omega_0 / C_1", omega0 / kC1},
               ThresholdTerm{"growing_gap", "(omega_0 / C2~)(Delta E_sigma / omega_0)^sigma", t.measure_scale},
               ThresholdTerm{"regularization", "2^-r (Delta E + 8 omega_0) / 4",
                             std::pow(2.0, -r) * (delta_e + 8.0 * omega0) / 4.0}};
    double m = t.terms[0].value;
    for (const auto& term : t.terms) m = std::min(m, term.value);
    t.threshold = t.prefactor * m;
    t.omega_interval = frequency_interval(omega0);
    t.auxiliary_bound = delta_e / 8.0;
    return t;
}

RelativeBound relative_bound_enclosure(const GradedSpace& space, double v_norm_inf1, double a,
                                       const std::optional<TailModel>& tail) {
    if (!(a < 0.0)) throw DomainError("relative bound needs a < 0");
    if (!(v_norm_inf1 >= 0.0)) throw DomainError("relative bound needs a nonnegative norm");
    RelativeBound out;
    for (int n = 0; n < space.block_count(); ++n) {
        const double dist = space.spectrum(n)(0) - a;
        if (!(dist > 0.0)) throw DomainError("a lies inside the spectrum of H_0");
        out.head += v_norm_inf1 / dist;
    }
    out.value = {out.head, out.head};
    if (!tail) {
        out.value.upper = out.head;
        return out;
    }
    TailSumOptions opts;
    opts.shape = TailShape::decreasing;
    opts.target_width = 1e-12 * std::max(out.head, 1e-300);
    const PowerLaw energy = tail->energy;
    const TailSumResult t = tail_sum(
        [&energy, a](double n) {
            const double d = energy(n) - a;
            return 1.0 / d;
        },
        space.block_count(), opts);
    if (t.divergent) {
        out.value.upper = std::numeric_limits<double>::infinity();
        return out;
    }
    out.value.lower += v_norm_inf1 * t.value.lower;
    out.value.upper += v_norm_inf1 * t.value.upper;
    out.tail_certified = t.shape_verified;
    return out;
}

double relative_bound(const GradedSpace& space, double v_norm_inf1, double a, const std::optional<TailModel>& tail) {
    return relative_bound_enclosure(space, v_norm_inf1, a, tail).value.upper;
}

double projection_decay_norm(const PeriodicBlockOperator& p, double exponent) { return norm_r(p, exponent); }

bool ThresholdReport::all_pass() const { return first_failure() == nullptr; }

const ThresholdCondition* ThresholdReport::first_failure() const {
    for (const auto& c : conditions)
        if (!c.pass) return &c;
    return nullptr;
}

ThresholdReport threshold_report(const GradedSpace& space, const PeriodicBlockOperator& v, double omega0,
                                 double sigma, double r, const std::optional<TailModel>& tail) {
    ThresholdReport rep;
    rep.omega0 = omega0;
    rep.sigma = sigma;
    rep.r = r;
    const GapReport gaps = gap_report(space, sigma, tail);
    rep.certified = gaps.tail_certified && !gaps.sigma_gap_divergent && !gaps.inverse_gap_divergent &&
                    gaps.sigma_gap_sum.finite() && gaps.inverse_gap_sum.finite();
    rep.delta0 = gaps.smallest_gap;
    rep.delta_e = rep.certified ? gaps.delta_e_certified() : gaps.delta_e_retained();
    rep.delta_e_sigma = rep.certified ? gaps.delta_e_sigma_certified() : gaps.delta_e_sigma_retained();
    rep.v_norm_r = norm_r(v, r);
    rep.v_triple_r = triple_norm_r(v, r);
    rep.v_weighted_triple = weighted_triple_norm(v, WeightSequence{r});

    if (r > sigma + 0.5) {
        rep.theorem1 = theorem1_threshold(omega0, sigma, r, rep.delta0, rep.delta_e_sigma);
        const bool pass = within_threshold(rep.v_norm_r, rep.theorem1->threshold);
        rep.conditions.push_back({"theorem1: ||V||_r < threshold", rep.v_norm_r, rep.theorem1->threshold, pass});
        if (pass) rep.theorem1_measure = rep.theorem1->measure_bound(rep.v_norm_r);
    } else {
        rep.theorem1_skipped = "needs r > sigma + 1/2";
    }
    if (r > sigma + 1.5) {
        rep.theorem3 = theorem3_threshold(omega0, sigma, r, rep.delta0, rep.delta_e, rep.delta_e_sigma);
        const bool pass = within_threshold(rep.v_triple_r, rep.theorem3->threshold);
        rep.conditions.push_back({"theorem3: |||V|||_r < threshold", rep.v_triple_r, rep.theorem3->threshold, pass});
        const bool aux = rep.v_weighted_triple <= rep.theorem3->auxiliary_bound;
        rep.conditions.push_back(
            {"theorem3: |||w_r V|||_0 <= Delta E / 8", rep.v_weighted_triple, rep.theorem3->auxiliary_bound, aux});
        if (pass) rep.theorem3_measure = rep.theorem3->measure_bound(rep.v_triple_r);
    } else {
        rep.theorem3_skipped = "needs r > sigma + 3/2";
    }
    return rep;
}

}  // namespace pdm
