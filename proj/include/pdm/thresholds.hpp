#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pdm/floquet.hpp"
#include "pdm/gaps.hpp"

namespace pdm {

/// C_1 of the smallness conditions. May not be sharp.
inline constexpr double kC1 = 24305.0;

/// C(sigma) = 25223 pi (2s+1)^3 (2(2s+1) / (e (1 - exp(-4/(2s+1)))))^{s+1/2}, in 50 digits.
double constant_C(double sigma);
/// C(sigma) / min{r - sigma - 1/2, (7/8)(2 sigma + 1)}^3; DomainError unless r > sigma + 1/2.
double constant_C2(double sigma, double r);

struct ThresholdTerm {
    std::string name;
    std::string expression;
    double value = 0.0;
};

/// Omega_0 = [8 omega_0/9, 9 omega_0/8].
std::pair<double, double> frequency_interval(double omega0);

struct Theorem1Threshold {
    double omega0 = 0.0, sigma = 0.0, r = 0.0, delta0 = 0.0, delta_e_sigma = 0.0;
    double c = 0.0, c2 = 0.0;
    std::array<ThresholdTerm, 3> terms;
    /// min of the terms; ||V||_r must lie strictly below.
    double threshold = 0.0;
    std::pair<double, double> omega_interval;
    /// (omega_0/C_2)(Delta E_sigma/omega_0)^sigma, the denominator of the measure bound.
    double measure_scale = 0.0;

    /// Lower bound on |Omega_inf|/|Omega_0| as a function of ||V||_r.
    double measure_bound(double v_norm) const { return 1.0 - v_norm / measure_scale; }
};

Theorem1Threshold theorem1_threshold(double omega0, double sigma, double r, double delta0, double delta_e_sigma);

struct Theorem3Threshold {
    double omega0 = 0.0, sigma = 0.0, r = 0.0, delta0 = 0.0, delta_e = 0.0, delta_e_sigma = 0.0;
    double c = 0.0, c2_tilde = 0.0;
    /// 1/(2(1 + 8 omega_0/Delta E)), in (0, 1/2].
    double prefactor = 0.0;
    std::array<ThresholdTerm, 4> terms;
    /// prefactor * min of the terms, compared against |||V|||_r.
    double threshold = 0.0;
    std::pair<double, double> omega_interval;
    double measure_scale = 0.0;
    /// |||w_r V|||_0 <= Delta E / 8, imposed on top of the threshold.
    double auxiliary_bound = 0.0;

    double measure_bound(double v_norm) const {
        return 1.0 - 2.0 * (1.0 + 8.0 * omega0 / delta_e) * v_norm / measure_scale;
    }
};

Theorem3Threshold theorem3_threshold(double omega0, double sigma, double r, double delta0, double delta_e,
                                     double delta_e_sigma);

/// Enclosure of sum_n ||V||_{inf,1} / dist(a, spec E_n) over the retained blocks plus
/// the declared tail. Without a tail the upper end is the head (uncertified).
struct RelativeBound {
    double head = 0.0;
    Bracket value;
    bool tail_certified = false;
};

RelativeBound relative_bound_enclosure(const GradedSpace& space, double v_norm_inf1, double a,
                                       const std::optional<TailModel>& tail = std::nullopt);
/// Upper end of the enclosure (the head sum when no tail is given).
double relative_bound(const GradedSpace& space, double v_norm_inf1, double a,
                      const std::optional<TailModel>& tail = std::nullopt);

/// ||P||_e = sup_m sum_k sum_n ||P(k,m,n)|| max{|k|^e, 1}.
double projection_decay_norm(const PeriodicBlockOperator& p, double exponent);

/// One smallness test with a relative guard band.
struct ThresholdCondition {
    std::string name;
    double value = 0.0;
    double bound = 0.0;
    bool pass = false;
};

struct ThresholdReport {
    double omega0 = 0.0, sigma = 0.0, r = 0.0;
    double delta0 = 0.0, delta_e = 0.0, delta_e_sigma = 0.0;
    /// Delta E and Delta E_sigma come from tail-certified enclosures.
    bool certified = false;
    double v_norm_r = 0.0;          ///< ||V||_r
    double v_triple_r = 0.0;        ///< |||V|||_r
    double v_weighted_triple = 0.0;  ///< |||w_r V|||_0
    double c1 = kC1;

    std::optional<Theorem1Threshold> theorem1;
    std::optional<Theorem3Threshold> theorem3;
    /// Why a theorem was not evaluated (precondition on r).
    std::string theorem1_skipped, theorem3_skipped;
    std::vector<ThresholdCondition> conditions;
    /// Measure bounds, present only when the matching smallness test passes.
    std::optional<double> theorem1_measure, theorem3_measure;

    bool all_pass() const;
    /// First failing condition, or nullptr.
    const ThresholdCondition* first_failure() const;
};

/// Evaluates both theorems for a driven model. Gap inputs are taken from gap_report
/// at the given sigma; the tail model, when present, makes them certified.
ThresholdReport threshold_report(const GradedSpace& space, const PeriodicBlockOperator& v, double omega0,
                                 double sigma, double r, const std::optional<TailModel>& tail = std::nullopt);

}  // namespace pdm
