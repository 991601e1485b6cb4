#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pdm/block_algebra.hpp"
#include "pdm/errors.hpp"
#include "pdm/gaps.hpp"
#include "pdm/majorant.hpp"

namespace pdm {

/// Iterate s of the diagonalization: H_s = H_0 + G_s + V_s = U_{s-1} (H_0 + V) U_{s-1}^*.
struct PdmState {
    int step = 1;
    BlockOperator u;  ///< U_{s-1}
    BlockOperator g;  ///< diagonal
    BlockOperator v;  ///< offdiagonal, symmetric
};

/// Gap data the iteration needs, taken from the retained blocks.
struct PdmProblem {
    SpacePtr space;
    /// 1/Delta E of the retained problem.
    double inverse_gap_sum = 0.0;
    /// Delta_m over retained blocks.
    std::vector<double> per_block_gap;
    double smallest_gap = 0.0;

    double delta_e() const { return 1.0 / inverse_gap_sum; }
    static PdmProblem from_space(SpacePtr space);
};

struct PdmOptions {
    /// Stop once ||V_s||_{inf,1} < tol; defaults to 1e-12 Delta E.
    std::optional<double> tol;
    int max_steps = 40;
    double reconstruction_tol = 1e-8;
    double unitarity_tol = 1e-10;
    /// Run even when ||V||_{inf,1} > Delta E / 8.
    bool unsafe = false;
    /// Compare the spectrum of H_s with that of H_0 + V after each step.
    bool check_spectrum = true;
};

struct PdmTraceEntry {
    int step = 0;
    double v_norm = 0.0;   ///< ||V_s||_{inf,1}
    double w_sh = 0.0;     ///< ||W_s||_SH (0 on the final entry)
    double g_norm = 0.0;   ///< ||G_s||
    double x_actual = 0.0; ///< pi ||V_s||_{inf,1} / Delta E
    double x_majorant = 0.0;
    /// Rounding floor of x_actual inherited from the previous conjugation.
    double x_floor = 0.0;
    /// min_m (Delta_m - 4 ||G_s(m)||); negative means a gap closed.
    double gap_slack = 0.0;
    bool gap_preserved = true;
    double unitarity_defect = 0.0;  ///< ||U_{s-1} U_{s-1}^* - I||
    double spectral_drift = 0.0;    ///< max |lambda_i(H_s) - lambda_i(H_0 + V)|
};

struct PdmCertificate {
    int iterations = 0;
    double delta_e = 0.0;
    double smallest_retained_gap = 0.0;
    double v_norm = 0.0;  ///< ||V||_{inf,1} of the input

    double j_sh_norm = 0.0;
    double g_operator_norm = 0.0;
    double reconstruction_residual = 0.0;
    double unitarity_defect = 0.0;
    /// ||[H_0, J]||_{inf,1} computed directly and through J G - V J.
    double commutator_regularity = 0.0;
    double commutator_regularity_identity = 0.0;
    double commutator_identity_defect = 0.0;
    /// Per block: 4 ||G_s(m)|| <= Delta_m held at every step.
    std::vector<bool> gap_preservation;
    double max_spectral_drift = 0.0;

    bool majorant_dominates = true;
    bool contraction_holds = true;  ///< ||V_{s+1}|| <= Phi(2 x_s) ||V_s|| up to rounding
    /// min over eligible steps of log x_{s+1} / log x_s; +inf if none were eligible.
    double superexponential_ratio = 0.0;
    int superexponential_samples = 0;

    double reconstruction_tol = 0.0;
    double unitarity_tol = 0.0;

    bool j_sh_ok() const { return j_sh_norm <= 1.5; }
    bool g_norm_ok() const { return g_operator_norm <= 2.0 * v_norm; }
    bool reconstruction_ok() const { return reconstruction_residual <= reconstruction_tol; }
    bool unitarity_ok() const { return unitarity_defect <= unitarity_tol; }
    bool gaps_ok() const;
    bool regularity_ok() const;
    bool superexponential_ok() const { return superexponential_ratio >= 1.8; }
    bool all_ok() const;
};

struct PdmResult {
    BlockOperator j;  ///< H_0 + V = J (H_0 + G) J^*
    BlockOperator g;
    PdmCertificate certificate;
    MajorantSequence majorant;
    std::vector<PdmTraceEntry> trace;
};

/// The iteration stopped without meeting the tolerance, or a gap closed.
class IterationError : public ConvergenceError {
public:
    enum class Reason { non_convergence, gap_violation };
    IterationError(const std::string& what, Reason reason, std::vector<PdmTraceEntry> trace)
        : ConvergenceError(what), reason_(reason), trace_(std::move(trace)) {}
    Reason reason() const noexcept { return reason_; }
    const std::vector<PdmTraceEntry>& trace() const noexcept { return trace_; }

private:
    Reason reason_;
    std::vector<PdmTraceEntry> trace_;
};

/// U_0 = id, G_1 = diag V, V_1 = offdiag V. Throws PreconditionError if V is not symmetric.
PdmState pdm_init(SpacePtr space, const BlockOperator& v);

struct PdmStepResult {
    PdmState state;
    BlockOperator w;
    double w_sh = 0.0;
    /// Bound on the rounding error of ||V_{s+1}||_{inf,1} introduced by this step.
    double v_floor = 0.0;
    double unitarity_defect = 0.0;
};

/// One conjugation H_{s+1} = e^{W_s} H_s e^{-W_s}. Throws IterationError when
/// 4 ||G_s(m)|| > Delta_m for some m.
PdmStepResult pdm_step(const PdmProblem& problem, const PdmState& state, const PdmOptions& options = {});

/// Runs the iteration to convergence and assembles J = U_inf^*, G = G_inf and the certificates.
/// Throws ThresholdRefusal when ||V||_{inf,1} > Delta E / 8 unless options.unsafe.
PdmResult pdm_run(SpacePtr space, const BlockOperator& v, const PdmOptions& options = {});
PdmResult pdm_run(const PdmProblem& problem, const BlockOperator& v, const PdmOptions& options = {});

/// Largest |lambda_i(H_0 + G) - lambda_i(H_0 + V)| / max(1, |lambda_i(H_0 + V)|) over the
/// sorted spectra, the right side from a dense eigensolver.
double spectrum_deviation(const GradedSpace& space, const BlockOperator& v, const BlockOperator& g);

/// value <= bound with a relative guard band, failing ties.
bool within_threshold(double value, double bound, double band = 1e-12);

}  // namespace pdm
