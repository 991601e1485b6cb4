#pragma once

#include <vector>

namespace pdm {

/// Phi(x) = e^x - (e^x - 1)/x; Taylor series sum_{k>=1} k x^k/(k+1)! below 1e-4.
double phi(double x);

/// Scalar recursion x_{s+1} = x_s Phi(2 x_s) started at x_1.
struct MajorantSequence {
    double x1 = 0.0;
    /// x_1, x_2, ... down to the stopping tolerance.
    std::vector<double> x;
    /// False when x1 >= 1/2; the sequence then need not decrease.
    bool contracting = true;
    bool converged = true;

    double sum_x = 0.0;
    double sum_x_phi = 0.0;  ///< sum_s x_s Phi(2 x_s)
    /// x1 / (1 - Phi(2 x1)); +inf when Phi(2 x1) >= 1.
    double closed_bound = 0.0;
    double exp_sum_x = 1.0;
    double exp_sum_x_phi = 1.0;
    /// 1/4 - sum_x_phi / pi
    double margin = 0.25;

    bool margin_holds() const { return margin >= 0.13; }
    bool exp_bound_holds() const { return exp_sum_x_phi <= 1.5; }
    bool closed_bound_holds() const { return sum_x <= closed_bound; }

    /// x_s for 1-based s; 0 past the stored tail.
    double at(int s) const { return s >= 1 && s <= static_cast<int>(x.size()) ? x[s - 1] : 0.0; }
};

MajorantSequence majorant_run(double x1, double tol = 1e-300, int max_steps = 400);

struct GChain {
    double value = 1.0;
    bool in_regime = true;  ///< x1 <= pi/8
    bool holds() const { return value <= 2.0; }
};

/// 1 + Phi(2x) + Phi(2x)Phi(2x Phi(2x)) / (1 - Phi(2x Phi(2x) Phi(2x Phi(2x)))).
GChain g_chain_bound(double x1);

/// (1/(2(1 - Phi(2x)))) exp(x / (2(1 - Phi(2x)))), the factor bounding the time derivative of J.
double jdot_factor(double x1);

/// The four numeric claims at a given x1, decided in 50-digit arithmetic.
struct ScalarConstantReport {
    double x1 = 0.0;
    double sum_x_phi = 0.0;
    double sum_x = 0.0;
    double margin = 0.0;         ///< 1/4 - (1/pi) sum x_s Phi(2x_s), claim >= 0.13
    double exp_sum_x_phi = 0.0;  ///< claim <= 3/2
    double exp_sum_x = 0.0;      ///< reported only
    double g_chain = 0.0;        ///< claim <= 2
    double jdot = 0.0;           ///< claim <= 3
    bool margin_holds = false;
    bool exp_bound_holds = false;
    bool exp_sum_x_holds = false;
    bool g_chain_holds = false;
    bool jdot_holds = false;

    bool all_hold() const { return margin_holds && exp_bound_holds && g_chain_holds && jdot_holds; }
};

/// Evaluated at x1 = pi/8 with pi taken to 50 digits.
ScalarConstantReport verify_scalar_constants();
ScalarConstantReport verify_scalar_constants(double x1);

}  // namespace pdm
