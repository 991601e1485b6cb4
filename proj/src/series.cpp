#include "pdm/series.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss.hpp>

#include "pdm/errors.hpp"

namespace pdm {

PowerLaw::PowerLaw(std::vector<Term> terms) : terms_(std::move(terms)) {
    for (const auto& t : terms_) {
        if (!(t.coefficient >= 0.0) || !(t.exponent >= 0.0))
            throw DomainError("power law terms need nonnegative coefficients and exponents");
    }
    std::sort(terms_.begin(), terms_.end(),
              [](const Term& a, const Term& b) { return a.exponent < b.exponent; });
}

double PowerLaw::operator()(double x) const {
    double s = 0.0;
    for (const auto& t : terms_) s += t.exponent == 0.0 ? t.coefficient : t.coefficient * std::pow(x, t.exponent);
    return s;
}

double PowerLaw::increment(double x, double h) const {
    double s = 0.0;
    for (const auto& t : terms_) {
        if (t.exponent == 0.0 || t.coefficient == 0.0) continue;
        if (x <= 0.0) {
            s += t.coefficient * (std::pow(x + h, t.exponent) - std::pow(x, t.exponent));
        } else {
            s += t.coefficient * std::pow(x, t.exponent) * std::expm1(t.exponent * std::log1p(h / x));
        }
    }
    return s;
}

PowerLaw::Term PowerLaw::leading() const {
    if (terms_.empty()) return {0.0, 0.0};
    for (auto it = terms_.rbegin(); it != terms_.rend(); ++it)
        if (it->coefficient > 0.0) return *it;
    return {0.0, 0.0};
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Far out the integrands are ratios of huge powers; treat overflow as decay.
double sanitize(double v, double x) {
    if (std::isfinite(v)) return v;
    return x > 1e30 ? 0.0 : v;
}

struct Integral {
    double value = 0.0;
    double error = 0.0;
    bool ok = true;
};

Integral integrate_to_infinity(const std::function<double(double)>& g, double a) {
    Integral out;
    try {
        boost::math::quadrature::exp_sinh<double> integrator;
        double err = 0.0, l1 = 0.0;
        auto h = [&](double x) { return sanitize(g(x), x); };
        out.value = integrator.integrate(h, a, kInf, 1e-13, &err, &l1);
        out.error = err;
        out.ok = std::isfinite(out.value) && err <= 1e-6 * std::max(std::abs(out.value), 1e-300);
    } catch (const std::exception&) {
        out.ok = false;
    }
    return out;
}

double integrate_segment(const std::function<double(double)>& g, double a, double b) {
    return boost::math::quadrature::gauss<double, 30>::integrate(g, a, b);
}

bool probe_shape(const std::function<double(double)>& g, double x0, bool convex) {
    double prev = g(x0);
    double x = x0;
    for (int j = 0; j < 40; ++j) {
        const double xn = 2.0 * x;
        const double v = sanitize(g(xn), xn);
        if (v > prev * (1.0 + 1e-12) + 1e-300) return false;
        if (convex) {
            const double mid = sanitize(g(1.5 * x), 1.5 * x);
            if (mid > 0.5 * (prev + v) * (1.0 + 1e-12) + 1e-300) return false;
        }
        prev = v;
        x = xn;
    }
    return true;
}

// x f(x) must fall by many orders over a wide geometric range, else the
// integral tail cannot be certified.
bool decays_faster_than_harmonic(const std::function<double(double)>& g, double x0) {
    const double first = x0 * g(x0);
    const double far = 0x1p60 * x0;
    const double last = sanitize(far * g(far), far);
    return std::isfinite(first) && last <= 1e-6 * std::abs(first);
}

}  // namespace

TailSumResult tail_sum(const std::function<Bracket(double)>& f, long start,
                       const TailSumOptions& options) {
    const bool convex = options.shape == TailShape::convex_decreasing;
    auto lo = [&](double x) { return f(x).lower; };
    auto hi = [&](double x) { return f(x).upper; };

    TailSumResult out;
    if (!decays_faster_than_harmonic(hi, static_cast<double>(std::max(start, 1L)))) {
        out.divergent = true;
        out.value = {0.0, kInf};
        return out;
    }
    long double head_lo = 0.0L, head_hi = 0.0L;
    long n = start;
    long chunk = std::max(1L, options.min_explicit_terms);
    bool have_bracket = false;

    while (true) {
        for (long i = 0; i < chunk; ++i, ++n) {
            const Bracket b = f(static_cast<double>(n));
            head_lo += b.lower;
            head_hi += b.upper;
        }
        out.explicit_terms = n - start;
        const double x = static_cast<double>(n);

        const Integral int_lo = integrate_to_infinity(lo, x);
        const Integral int_hi = integrate_to_infinity(hi, x);
        if (int_lo.ok && int_hi.ok) {
            const Bracket fx = f(x);
            double rem_lo = int_lo.value - int_lo.error;
            double rem_hi = int_hi.value + int_hi.error;
            if (convex) {
                rem_lo += 0.5 * fx.lower;
                rem_hi += integrate_segment(hi, x - 0.5, x);
            } else {
                rem_hi += fx.upper;
            }
            out.value.lower = static_cast<double>(head_lo) + std::max(0.0, rem_lo);
            out.value.upper = static_cast<double>(head_hi) + rem_hi;
            have_bracket = true;
            if (out.value.width() <= options.target_width) break;
        }
        if (out.explicit_terms >= options.max_explicit_terms) break;
        chunk = std::min(out.explicit_terms, options.max_explicit_terms - out.explicit_terms);
    }

    if (!have_bracket) {
        out.divergent = true;
        out.value = {static_cast<double>(head_lo), kInf};
        return out;
    }
    out.shape_verified = probe_shape(hi, static_cast<double>(n), convex) &&
                         probe_shape(lo, static_cast<double>(n), convex);
    return out;
}

TailSumResult tail_sum(const std::function<double(double)>& f, long start,
                       const TailSumOptions& options) {
    return tail_sum(
        [&](double x) {
            const double v = f(x);
            return Bracket{v, v};
        },
        start, options);
}

}  // namespace pdm
