#include "pdm/majorant.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

namespace pdm {

namespace {

using Wide = boost::multiprecision::cpp_bin_float_50;

template <class Real>
Real phi_impl(const Real& x) {
    using std::exp;
    using std::expm1;
    if (x <= Real(0)) return Real(0);
    if (x > Real(1e-4)) return exp(x) - expm1(x) / x;
    const Real eps = std::numeric_limits<Real>::epsilon();
    Real power = x;  // x^k
    Real fact = 2;   // (k+1)!
    Real sum = 0;
    for (int k = 1; k < 200; ++k) {
        const Real term = Real(k) * power / fact;
        sum += term;
        if (term <= eps * sum) break;
        power *= x;
        fact *= Real(k + 2);
    }
    return sum;
}

template <class Real>
struct Sums {
    std::vector<Real> x;
    Real sum_x = 0;
    Real sum_x_phi = 0;
    bool converged = true;
};

template <class Real>
Sums<Real> iterate(const Real& x1, const Real& tol, int max_steps) {
    Sums<Real> out;
    Real x = x1;
    for (int s = 1;; ++s) {
        out.x.push_back(x);
        const Real next = x * phi_impl(Real(2) * x);
        out.sum_x += x;
        out.sum_x_phi += next;
        if (x <= tol) break;
        if (s >= max_steps) {
            out.converged = false;
            break;
        }
        x = next;
    }
    return out;
}

template <class Real>
Real g_chain_impl(const Real& x) {
    const Real p1 = phi_impl(Real(2) * x);
    const Real p2 = phi_impl(Real(2) * x * p1);
    const Real p3 = phi_impl(Real(2) * x * p1 * p2);
    return Real(1) + p1 + p1 * p2 / (Real(1) - p3);
}

template <class Real>
Real jdot_impl(const Real& x) {
    using std::exp;
    const Real half = Real(1) / (Real(2) * (Real(1) - phi_impl(Real(2) * x)));
    return half * exp(x * half);
}

ScalarConstantReport scalar_report(const Wide& x1) {
    using boost::multiprecision::exp;
    const Wide pi = boost::math::constants::pi<Wide>();
    const Sums<Wide> sums = iterate<Wide>(x1, Wide("1e-60"), 400);
    const Wide margin = Wide(0.25) - sums.sum_x_phi / pi;
    const Wide e_phi = exp(sums.sum_x_phi);
    const Wide e_x = exp(sums.sum_x);
    const Wide chain = g_chain_impl(x1);
    const Wide jdot = jdot_impl(x1);

    ScalarConstantReport r;
    r.x1 = static_cast<double>(x1);
    r.sum_x_phi = static_cast<double>(sums.sum_x_phi);
    r.sum_x = static_cast<double>(sums.sum_x);
    r.margin = static_cast<double>(margin);
    r.exp_sum_x_phi = static_cast<double>(e_phi);
    r.exp_sum_x = static_cast<double>(e_x);
    r.g_chain = static_cast<double>(chain);
    r.jdot = static_cast<double>(jdot);
    r.margin_holds = sums.converged && margin >= Wide("0.13");
    r.exp_bound_holds = sums.converged && e_phi <= Wide(1.5);
    r.exp_sum_x_holds = sums.converged && e_x <= Wide(1.5);
    r.g_chain_holds = chain <= Wide(2);
    r.jdot_holds = jdot <= Wide(3);
    return r;
}

}  // namespace

double phi(double x) { return phi_impl(x); }

MajorantSequence majorant_run(double x1, double tol, int max_steps) {
    MajorantSequence out;
    out.x1 = x1;
    out.contracting = x1 < 0.5;
    const Sums<double> sums = iterate(x1, tol, max_steps);
    out.x = sums.x;
    out.converged = sums.converged;
    out.sum_x = sums.sum_x;
    out.sum_x_phi = sums.sum_x_phi;
    const double p = phi(2.0 * x1);
    out.closed_bound = p < 1.0 ? x1 / (1.0 - p) : std::numeric_limits<double>::infinity();
    out.exp_sum_x = std::exp(out.sum_x);
    out.exp_sum_x_phi = std::exp(out.sum_x_phi);
    out.margin = 0.25 - out.sum_x_phi / std::numbers::pi;
    return out;
}

GChain g_chain_bound(double x1) {
    return {g_chain_impl(x1), x1 <= std::numbers::pi / 8.0};
}

double jdot_factor(double x1) { return jdot_impl(x1); }

ScalarConstantReport verify_scalar_constants() {
    return scalar_report(boost::math::constants::pi<Wide>() / 8);
}

ScalarConstantReport verify_scalar_constants(double x1) { return scalar_report(Wide(x1)); }

}  // namespace pdm
