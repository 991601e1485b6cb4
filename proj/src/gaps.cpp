#include "pdm/gaps.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pdm/errors.hpp"

namespace pdm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Row sums of blocks m >= N. With E(n) - E(m) >= a (n^k - m^k) and
// |n^k - m^k| >= max(n,m)^{k-1} |n - m| the row sum is at most
//   B(m) = sum_{n<N} 1/(E(m) - lmax_n) + m^{1-k} (2 (1 + ln m) + 1/(k-1)) / a,
// which decreases once 2 (k-1)(1 + ln m) > 1.
double tail_row_bound(const TailModel& tail, const std::vector<double>& retained_max, double* sup_at) {
    const auto lead = tail.energy.leading();
    const double k = lead.exponent, a = lead.coefficient;
    const auto n_retained = static_cast<long>(retained_max.size());
    auto bound = [&](long m) {
        const double em = tail.energy(static_cast<double>(m));
        double s = 0.0;
        for (double lm : retained_max) s += 1.0 / (em - lm);
        const double md = static_cast<double>(m);
        return s + std::pow(md, 1.0 - k) * (2.0 * (1.0 + std::log(md)) + 1.0 / (k - 1.0)) / a;
    };
    const double turn = std::exp(1.0 / (2.0 * (k - 1.0)) - 1.0);
    const long last = std::max(n_retained, static_cast<long>(std::ceil(std::min(turn, 1e7))));
    double best = 0.0;
    for (long m = n_retained; m <= last; ++m) {
        const double b = bound(m);
        if (b > best) {
            best = b;
            if (sup_at) *sup_at = static_cast<double>(m);
        }
    }
    return turn > 1e7 ? kInf : best;
}

}  // namespace

double GapReport::delta_e_certified() const {
    if (!tail_certified || inverse_gap_divergent || !inverse_gap_sum.finite()) return 0.0;
    return 1.0 / inverse_gap_sum.upper;
}

double GapReport::delta_e_sigma_certified() const {
    if (!tail_certified || sigma_gap_divergent || !sigma_gap_sum.finite()) return 0.0;
    return std::pow(sigma_gap_sum.upper, -1.0 / sigma);
}

double GapReport::delta_e_sigma_retained() const { return std::pow(sigma_gap_sum_head, -1.0 / sigma); }

GapReport gap_report(const GradedSpace& space, double sigma, const std::optional<TailModel>& tail,
                     const GapReportOptions& options) {
    std::vector<RealVector> spectra;
    spectra.reserve(space.block_count());
    for (int n = 0; n < space.block_count(); ++n) spectra.push_back(space.spectrum(n));
    return gap_report(spectra, sigma, tail, options);
}

GapReport gap_report(const std::vector<RealVector>& spectra, double sigma, const std::optional<TailModel>& tail,
                     const GapReportOptions& options) {
    for (const auto& s : spectra)
        if (s.size() == 0) throw StructuralError("gap_report: empty block");
    if (!(sigma > 0.0)) throw DomainError("gap_report: sigma must be positive");
    const int count = static_cast<int>(spectra.size());
    if (count < 2) throw StructuralError("gap_report: at least two blocks are required");

    GapReport r;
    r.truncation = count;
    r.sigma = sigma;
    r.pairwise.assign(static_cast<std::size_t>(count) * count, 0.0);
    r.per_block_gap.assign(count, kInf);
    r.smallest_retained_gap = kInf;

    for (int m = 0; m < count; ++m) {
        for (int n = m + 1; n < count; ++n) {
            const double d = sorted_distance(spectra[m], spectra[n]);
            if (!(d > 0.0)) {
                std::ostringstream msg;
                msg << "gap_report: blocks " << m << " and " << n << " share spectrum";
                throw SingularGapError(msg.str());
            }
            r.pairwise[static_cast<std::size_t>(m) * count + n] = d;
            r.pairwise[static_cast<std::size_t>(n) * count + m] = d;
            r.per_block_gap[m] = std::min(r.per_block_gap[m], d);
            r.per_block_gap[n] = std::min(r.per_block_gap[n], d);
            r.smallest_retained_gap = std::min(r.smallest_retained_gap, d);
        }
    }
    r.smallest_gap = r.smallest_retained_gap;

    std::vector<double> row_head(count, 0.0);
    long double sigma_head = 0.0L;
    for (int m = 0; m < count; ++m) {
        long double row = 0.0L;
        for (int n = 0; n < count; ++n) {
            if (n == m) continue;
            const double d = r.pairwise_gap(m, n);
            row += 1.0L / d;
            sigma_head += static_cast<long double>(spectra[m].size()) * spectra[n].size() / std::pow(d, sigma);
        }
        row_head[m] = static_cast<double>(row);
    }
    r.inverse_gap_argmax =
        static_cast<int>(std::max_element(row_head.begin(), row_head.end()) - row_head.begin());
    r.inverse_gap_sum_head = row_head[r.inverse_gap_argmax];
    r.sigma_gap_sum_head = static_cast<double>(sigma_head);
    r.inverse_gap_sum = {r.inverse_gap_sum_head, kInf};
    r.sigma_gap_sum = {r.sigma_gap_sum_head, kInf};
    if (!tail) return r;

    // ---- certified tails
    const TailModel& model = *tail;
    const auto lead = model.energy.leading();
    if (!(lead.coefficient > 0.0) || !(lead.exponent > 0.0))
        throw PreconditionError("gap_report: tail energy law must grow");
    double lambda_max = -std::numeric_limits<double>::infinity();
    for (const auto& s : spectra) lambda_max = std::max(lambda_max, s(s.size() - 1));
    const double first_tail = model.energy(static_cast<double>(count));
    if (!(first_tail > lambda_max)) {
        std::ostringstream msg;
        msg << "gap_report: tail law gives E(" << count << ") = " << first_tail
            << ", not above the retained spectrum (max " << lambda_max << ")";
        throw PreconditionError(msg.str());
    }
    r.tail_certified = true;

    std::vector<double> retained_max(count);
    for (int m = 0; m < count; ++m) retained_max[m] = spectra[m](spectra[m].size() - 1);

    // gaps that involve tail blocks
    double tail_gap = first_tail - lambda_max;
    for (int j = 0; j < 64; ++j) tail_gap = std::min(tail_gap, model.energy.increment(count + j, 1.0));
    r.smallest_gap = std::min(r.smallest_gap, tail_gap);
    for (int m = 0; m < count; ++m) r.per_block_gap[m] = std::min(r.per_block_gap[m], first_tail - retained_max[m]);

    // 1/Delta E
    TailSumOptions row_opts;
    row_opts.target_width = options.inverse_gap_relative_width * r.inverse_gap_sum_head;
    Bracket sup{0.0, 0.0};
    bool divergent = lead.exponent <= 1.0;
    for (int m = 0; m < count && !divergent; ++m) {
        const double lm = retained_max[m];
        const auto t = tail_sum([&](double x) { return 1.0 / (model.energy(x) - lm); }, count, row_opts);
        divergent = divergent || t.divergent;
        r.shape_verified = r.shape_verified && t.shape_verified;
        sup.lower = std::max(sup.lower, row_head[m] + t.value.lower);
        sup.upper = std::max(sup.upper, row_head[m] + t.value.upper);
    }
    if (divergent) {
        r.inverse_gap_divergent = true;
    } else {
        r.inverse_gap_tail_rows = tail_row_bound(model, retained_max, nullptr);
        sup.upper = std::max(sup.upper, r.inverse_gap_tail_rows);
        r.inverse_gap_sum = sup;
    }

    // 1/(Delta E_sigma)^sigma
    const double target = options.sigma_relative_width * r.sigma_gap_sum_head;
    TailSumOptions cross_opts;
    cross_opts.target_width = 0.25 * target / count;
    Bracket total{r.sigma_gap_sum_head, r.sigma_gap_sum_head};
    bool sigma_divergent = false;
    for (int m = 0; m < count && !sigma_divergent; ++m) {
        const double lm = retained_max[m];
        const auto t = tail_sum(
            [&](double x) { return model.multiplicity(x) / std::pow(model.energy(x) - lm, sigma); }, count,
            cross_opts);
        sigma_divergent = t.divergent;
        r.shape_verified = r.shape_verified && t.shape_verified;
        total += (2.0 * static_cast<double>(spectra[m].size())) * t.value;
    }
    if (!sigma_divergent) {
        // pairs with both indices in the tail: 2 sum_{m >= N} t(m)
        bool inner_ok = true;
        auto inner = [&](double m) -> Bracket {
            const double mm = model.multiplicity(m);
            auto term = [&](double j) { return model.multiplicity(m + j) / std::pow(model.energy.increment(m, j), sigma); };
            TailSumOptions o;
            o.target_width = 0.25 * options.sigma_relative_width * mm * term(1.0);
            o.min_explicit_terms = 8;
            o.max_explicit_terms = 1L << 14;
            const auto t = tail_sum(term, 1, o);
            if (t.divergent) inner_ok = false;
            return mm * t.value;
        };
        TailSumOptions outer_opts;
        outer_opts.target_width = 0.25 * target;
        outer_opts.min_explicit_terms = 8;
        outer_opts.max_explicit_terms = 1L << 13;
        const auto tt = tail_sum(inner, count, outer_opts);
        sigma_divergent = tt.divergent || !inner_ok || !tt.value.finite();
        r.shape_verified = r.shape_verified && tt.shape_verified;
        total += 2.0 * tt.value;
    }
    if (sigma_divergent)
        r.sigma_gap_divergent = true;
    else
        r.sigma_gap_sum = total;
    return r;
}

}  // namespace pdm
