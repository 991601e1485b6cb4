#pragma once

#include <optional>
#include <vector>

#include "pdm/block_algebra.hpp"
#include "pdm/series.hpp"

namespace pdm {

/// Declared law for the blocks beyond the truncation: for every n >= N the block
/// E_n is the scalar energy(n) with multiplicity multiplicity(n). Both laws are
/// power series with nonnegative terms; the energy must grow past every retained
/// eigenvalue.
struct TailModel {
    PowerLaw energy;
    PowerLaw multiplicity;
};

struct GapReportOptions {
    /// Width goals of the certified enclosures, relative to the head values.
    double inverse_gap_relative_width = 1e-10;
    double sigma_relative_width = 1e-4;
};

/// Gap data of a graded space. Sums over the infinite index set are enclosed in
/// brackets; without a tail model the upper ends are +inf ("head-only").
struct GapReport {
    int truncation = 0;
    double sigma = 0.0;
    bool tail_certified = false;

    /// Delta_{m,n} = dist(spec E_m, spec E_n) over retained blocks, row-major N x N (0 on the diagonal).
    std::vector<double> pairwise;
    /// Delta_m = inf_{n != m} Delta_{m,n}; includes tail blocks when certified.
    std::vector<double> per_block_gap;
    /// Delta_0 = min_{m != n} Delta_{m,n}.
    double smallest_gap = 0.0;
    double smallest_retained_gap = 0.0;

    /// 1/Delta E = sup_m sum_{n != m} 1/Delta_{m,n}.
    double inverse_gap_sum_head = 0.0;
    int inverse_gap_argmax = 0;
    Bracket inverse_gap_sum;
    /// Certified bound on the row sums of blocks beyond the truncation.
    double inverse_gap_tail_rows = 0.0;
    bool inverse_gap_divergent = false;

    /// 1/(Delta E_sigma)^sigma = sum_{m != n} M_m M_n / Delta_{m,n}^sigma.
    double sigma_gap_sum_head = 0.0;
    Bracket sigma_gap_sum;
    bool sigma_gap_divergent = false;

    /// Probe-grid checks of the monotonicity used by the integral comparison.
    bool shape_verified = true;

    double pairwise_gap(int m, int n) const { return pairwise[static_cast<std::size_t>(m) * truncation + n]; }
    /// Delta E of the retained problem.
    double delta_e_retained() const { return 1.0 / inverse_gap_sum_head; }
    /// Certified lower bound of Delta E (0 if uncertified or divergent).
    double delta_e_certified() const;
    /// Certified lower bound of Delta E_sigma (0 if uncertified or divergent).
    double delta_e_sigma_certified() const;
    double delta_e_sigma_retained() const;
};

/// Computes the gap report; throws SingularGapError when two retained blocks share spectrum.
GapReport gap_report(const GradedSpace& space, double sigma, const std::optional<TailModel>& tail = std::nullopt,
                     const GapReportOptions& options = {});
/// Same from the ascending spectra of the blocks alone.
GapReport gap_report(const std::vector<RealVector>& spectra, double sigma, const std::optional<TailModel>& tail = std::nullopt,
                     const GapReportOptions& options = {});

}  // namespace pdm
