#include "pdm/pdm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "pdm/commutator.hpp"

namespace pdm {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double dense_norm(const Matrix& a) {
    if (a.size() == 0) return 0.0;
    Eigen::BDCSVD<Matrix> svd(a);
    return svd.singularValues()(0);
}

double hermitian_norm(const Matrix& a) {
    if (a.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.adjoint()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

double unitarity_defect(const Matrix& u) {
    Matrix d = u * u.adjoint();
    d.diagonal().array() -= 1.0;
    return hermitian_norm(d);
}

/// max_m ||X(m,m)|| for a block diagonal X, equal to its operator norm.
double diagonal_norm(const BlockOperator& x) { return norm_inf1(x); }

struct GapCheck {
    double slack = std::numeric_limits<double>::infinity();
    int worst = -1;
    std::vector<bool> per_block;
};

GapCheck check_gaps(const PdmProblem& problem, const BlockOperator& g) {
    const int nb = problem.space->block_count();
    GapCheck out;
    out.per_block.assign(nb, true);
    for (int m = 0; m < nb; ++m) {
        const Matrix* b = g.find(m, m);
        const double gn = b ? spectral_norm(*b) : 0.0;
        const double slack = problem.per_block_gap[m] - 4.0 * gn;
        out.per_block[m] = slack >= 0.0;
        if (slack < out.slack) {
            out.slack = slack;
            out.worst = m;
        }
    }
    return out;
}

/// Upper bound on ||H||_2 from the diagonal blocks and the SH norm of the rest.
double h_norm_bound(const GradedSpace& space, const PdmState& s) {
    double diag = 0.0;
    for (int m = 0; m < space.block_count(); ++m) {
        const Matrix* g = s.g.find(m, m);
        const Matrix e = g ? Matrix(space.energy(m) + *g) : space.energy(m);
        diag = std::max(diag, spectral_norm(e));
    }
    return diag + norm_sh(s.v);
}

RealVector sorted_spectrum(const Matrix& h) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

}  // namespace

bool within_threshold(double value, double bound, double band) { return value <= bound * (1.0 - band); }

PdmProblem PdmProblem::from_space(SpacePtr space) {
    const GradedSpace& sp = *space;
    if (sp.block_count() < 2) throw PreconditionError("the iteration needs at least two blocks");
    const GapReport report = gap_report(sp, 2.0);
    PdmProblem p;
    p.space = std::move(space);
    p.inverse_gap_sum = report.inverse_gap_sum_head;
    p.smallest_gap = report.smallest_retained_gap;
    const int nb = sp.block_count();
    p.per_block_gap.assign(nb, std::numeric_limits<double>::infinity());
    for (int m = 0; m < nb; ++m)
        for (int n = 0; n < nb; ++n)
            if (m != n) p.per_block_gap[m] = std::min(p.per_block_gap[m], report.pairwise_gap(m, n));
    return p;
}

bool PdmCertificate::gaps_ok() const {
    return std::all_of(gap_preservation.begin(), gap_preservation.end(), [](bool b) { return b; });
}

bool PdmCertificate::regularity_ok() const {
    return std::isfinite(commutator_regularity) && std::isfinite(commutator_regularity_identity) &&
           commutator_identity_defect <= reconstruction_tol;
}

bool PdmCertificate::all_ok() const {
    return j_sh_ok() && g_norm_ok() && reconstruction_ok() && unitarity_ok() && gaps_ok() && regularity_ok() &&
           majorant_dominates && contraction_holds && superexponential_ok();
}

PdmState pdm_init(SpacePtr space, const BlockOperator& v) {
    if (!v.space().same_layout(*space)) throw StructuralError("pdm_init: V lives on a different space");
    const double defect = v.symmetry_defect(+1);
    if (defect > 1e-12) {
        std::ostringstream msg;
        msg << "pdm_init: V is not symmetric (defect " << defect << ")";
        throw PreconditionError(msg.str());
    }
    DiagonalSplit split = split_diagonal(v);
    return PdmState{1, BlockOperator::identity(space), std::move(split.diagonal), std::move(split.offdiagonal)};
}

PdmStepResult pdm_step(const PdmProblem& problem, const PdmState& state, const PdmOptions& options) {
    const GradedSpace& space = *problem.space;
    const GapCheck gaps = check_gaps(problem, state.g);
    if (gaps.slack < 0.0) {
        std::ostringstream msg;
        msg << "gap preservation violated at step " << state.step << ": 4||G(" << gaps.worst
            << ")|| exceeds Delta_" << gaps.worst << " by " << -gaps.slack;
        throw IterationError(msg.str(), IterationError::Reason::gap_violation, {});
    }

    BlockCommutatorOptions copts;
    copts.inverse_gap_sum = problem.inverse_gap_sum;
    const BlockOperator h_diag = BlockOperator::energy(problem.space) + state.g;
    BlockCommutatorSolution sol = solve_block_commutator(h_diag, state.v, copts);

    PdmStepResult out{state, std::move(sol.w), sol.w_sh_norm, 0.0, 0.0};
    if (out.w.empty()) {
        out.state.step += 1;
        return out;
    }

    const Matrix x = expm1_skew_hermitian(out.w.to_dense());
    const double step_defect = unitarity_defect_from_increment(x);
    if (step_defect > options.unitarity_tol) {
        std::ostringstream msg;
        msg << "e^W unitarity defect " << step_defect << " exceeds " << options.unitarity_tol;
        throw ConvergenceError(msg.str());
    }

    // e^W H e^{-W} = H + XH + HX^* + XHX^* with X = e^W - I, which keeps the
    // rounding error proportional to ||W|| rather than ||H||.
    const Matrix h = space.dense_h0() + (state.g + state.v).to_dense();
    const Matrix xh = x * h;
    Matrix hn = h + xh + xh.adjoint() + xh * x.adjoint();
    hn = (0.5 * (hn + hn.adjoint().eval())).eval();

    Matrix u = state.u.to_dense();
    u += x * u;
    out.unitarity_defect = unitarity_defect(u);

    hn -= space.dense_h0();
    DiagonalSplit split = split_diagonal(BlockOperator::from_dense(problem.space, hn));
    out.state.step = state.step + 1;
    out.state.u = BlockOperator::from_dense(problem.space, u);
    out.state.g = std::move(split.diagonal);
    out.state.v = std::move(split.offdiagonal);
    out.v_floor = 8.0 * space.total_dim() * kEps * out.w_sh * h_norm_bound(space, state);
    return out;
}

PdmResult pdm_run(SpacePtr space, const BlockOperator& v, const PdmOptions& options) {
    return pdm_run(PdmProblem::from_space(std::move(space)), v, options);
}

PdmResult pdm_run(const PdmProblem& problem, const BlockOperator& v, const PdmOptions& options) {
    const GradedSpace& space = *problem.space;
    const double delta_e = problem.delta_e();
    const double tol = options.tol.value_or(1e-12 * delta_e);
    if (!(tol > 0.0)) throw UsageError("pdm_run: tolerance must be positive");

    PdmState state = pdm_init(problem.space, v);
    const double v_norm = norm_inf1(v);
    if (!options.unsafe && !within_threshold(v_norm, delta_e / 8.0)) {
        std::ostringstream msg;
        msg << "||V||_{inf,1} = " << v_norm << " exceeds Delta E / 8 = " << delta_e / 8.0;
        throw ThresholdRefusal(msg.str(), "||V||_{inf,1} <= Delta E / 8", v_norm, delta_e / 8.0);
    }

    const double x_scale = std::numbers::pi / delta_e;
    PdmResult result{BlockOperator(problem.space), BlockOperator(problem.space), {}, {}, {}};
    result.majorant = majorant_run(x_scale * norm_inf1(state.v));

    RealVector reference;
    const Matrix h_ref = space.dense_h0() + v.to_dense();
    if (options.check_spectrum) reference = sorted_spectrum(h_ref);

    PdmCertificate& cert = result.certificate;
    cert.delta_e = delta_e;
    cert.smallest_retained_gap = problem.smallest_gap;
    cert.v_norm = v_norm;
    cert.reconstruction_tol = options.reconstruction_tol;
    cert.unitarity_tol = options.unitarity_tol;
    cert.gap_preservation.assign(space.block_count(), true);

    double allowance = 0.0;  // accumulated rounding floor on x_s
    double unitarity = 0.0;
    for (;;) {
        PdmTraceEntry entry;
        entry.step = state.step;
        entry.v_norm = norm_inf1(state.v);
        entry.g_norm = diagonal_norm(state.g);
        entry.x_actual = x_scale * entry.v_norm;
        entry.x_majorant = result.majorant.at(state.step);
        entry.x_floor = allowance;
        entry.unitarity_defect = unitarity;
        const GapCheck gaps = check_gaps(problem, state.g);
        entry.gap_slack = gaps.slack;
        entry.gap_preserved = gaps.slack >= 0.0;
        for (std::size_t m = 0; m < gaps.per_block.size(); ++m)
            if (!gaps.per_block[m]) cert.gap_preservation[m] = false;
        if (options.check_spectrum) {
            const RealVector now = sorted_spectrum(space.dense_h0() + (state.g + state.v).to_dense());
            entry.spectral_drift = (now - reference).cwiseAbs().maxCoeff();
        }

        if (entry.v_norm < tol) {
            result.trace.push_back(entry);
            break;
        }
        if (state.step > options.max_steps) {
            result.trace.push_back(entry);
            std::ostringstream msg;
            msg << "no convergence within " << options.max_steps << " steps: ||V_s||_{inf,1} = " << entry.v_norm
                << " >= " << tol;
            throw IterationError(msg.str(), IterationError::Reason::non_convergence, result.trace);
        }

        auto step = [&] {
            try {
                return pdm_step(problem, state, options);
            } catch (const IterationError& e) {
                result.trace.push_back(entry);
                throw IterationError(e.what(), e.reason(), result.trace);
            }
        }();
        entry.w_sh = step.w_sh;
        result.trace.push_back(entry);

        const double x_next = x_scale * norm_inf1(step.state.v);
        const double floor = x_scale * step.v_floor;
        if (x_next > phi(2.0 * entry.x_actual) * entry.x_actual + floor) cert.contraction_holds = false;
        allowance = 2.0 * allowance + floor;
        unitarity = step.unitarity_defect;
        state = std::move(step.state);
    }

    cert.iterations = state.step - 1;
    for (const auto& e : result.trace) {
        cert.max_spectral_drift = std::max(cert.max_spectral_drift, e.spectral_drift);
        if (e.x_actual > e.x_majorant * (1.0 + 1e-12) + e.x_floor) cert.majorant_dominates = false;
    }
    cert.superexponential_ratio = std::numeric_limits<double>::infinity();
    const double small = x_scale * 1e-2 * delta_e;
    for (std::size_t i = 0; i + 1 < result.trace.size(); ++i) {
        const PdmTraceEntry& a = result.trace[i];
        const PdmTraceEntry& b = result.trace[i + 1];
        if (!(a.x_actual < small) || !(b.x_actual > 100.0 * b.x_floor) || b.x_actual <= 0.0) continue;
        cert.superexponential_ratio = std::min(cert.superexponential_ratio, std::log(b.x_actual) / std::log(a.x_actual));
        ++cert.superexponential_samples;
    }

    // H_0 + G = U (H_0 + V) U^*, so J = U^*.
    const Matrix u = state.u.to_dense();
    const Matrix j = u.adjoint();
    result.j = BlockOperator::from_dense(problem.space, j);
    result.g = state.g;

    const Matrix h0 = space.dense_h0();
    const Matrix g_dense = state.g.to_dense();
    const Matrix v_dense = v.to_dense();
    cert.j_sh_norm = norm_sh(result.j);
    cert.g_operator_norm = diagonal_norm(state.g);
    cert.reconstruction_residual = dense_norm(j * (h0 + g_dense) * u - h_ref);
    cert.unitarity_defect = unitarity_defect(j);
    const Matrix direct = h0 * j - j * h0;
    const Matrix identity = j * g_dense - v_dense * j;
    cert.commutator_regularity = norm_inf1(BlockOperator::from_dense(problem.space, direct));
    cert.commutator_regularity_identity = norm_inf1(BlockOperator::from_dense(problem.space, identity));
    cert.commutator_identity_defect = norm_inf1(BlockOperator::from_dense(problem.space, direct - identity));
    return result;
}

}  // namespace pdm

namespace pdm {

double spectrum_deviation(const GradedSpace& space, const BlockOperator& v, const BlockOperator& g) {
    const Matrix h0 = space.dense_h0();
    const RealVector a = hermitian_eigenvalues(h0 + g.to_dense());
    const RealVector b = hermitian_eigenvalues(h0 + v.to_dense());
    double dev = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) dev = std::max(dev, std::abs(a(i) - b(i)) / std::max(1.0, std::abs(b(i))));
    return dev;
}

}  // namespace pdm
