#pragma once

#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "pdm/block_algebra.hpp"
#include "pdm/commutator.hpp"
#include "pdm/pdm.hpp"

namespace pdm {

/// Fourier family t -> V(t) = sum_k V_k e^{ikt} of block operators, period 2 pi.
class PeriodicBlockOperator {
public:
    explicit PeriodicBlockOperator(SpacePtr space);
    /// Time-independent family with V_0 = x.
    static PeriodicBlockOperator constant(const BlockOperator& x);

    const GradedSpace& space() const { return *space_; }
    const SpacePtr& space_ptr() const { return space_; }

    void set(int k, BlockOperator x);
    /// Adds to the block (m, n) of V_k.
    void add(int k, int m, int n, const Matrix& block);
    const BlockOperator* find(int k) const;
    BlockOperator coefficient(int k) const;
    const std::map<int, BlockOperator>& coefficients() const { return coefficients_; }
    bool empty() const { return coefficients_.empty(); }

    /// Largest |k| with a stored coefficient (0 when empty).
    int max_frequency() const;
    /// V(t) as a block operator.
    BlockOperator at(double t) const;
    Matrix dense_at(double t) const;

    /// max |V(-k,n,m) - V(k,m,n)^*| entrywise; zero for a Hermitian-valued family.
    double symmetry_defect() const;
    bool is_symmetric(double tol = 1e-12) const { return symmetry_defect() <= tol; }

    PeriodicBlockOperator& operator+=(const PeriodicBlockOperator& other);
    PeriodicBlockOperator& operator-=(const PeriodicBlockOperator& other);
    PeriodicBlockOperator& operator*=(Complex s);
    friend PeriodicBlockOperator operator+(PeriodicBlockOperator a, const PeriodicBlockOperator& b) { return a += b; }
    friend PeriodicBlockOperator operator-(PeriodicBlockOperator a, const PeriodicBlockOperator& b) { return a -= b; }
    friend PeriodicBlockOperator operator*(Complex s, PeriodicBlockOperator a) { return a *= s; }

private:
    SpacePtr space_;
    std::map<int, BlockOperator> coefficients_;
};

/// Pointwise product in t, i.e. convolution of the coefficient sequences.
/// Coefficients with |k| > max_frequency are dropped; their summed block norms go to `dropped`.
PeriodicBlockOperator multiply(const PeriodicBlockOperator& x, const PeriodicBlockOperator& y,
                               std::optional<int> max_frequency = std::nullopt, double* dropped = nullptr);
/// t -> X(t)^*.
PeriodicBlockOperator adjoint(const PeriodicBlockOperator& x);
/// Time derivative: coefficient k multiplied by ik.
PeriodicBlockOperator derivative(const PeriodicBlockOperator& x);
/// Keeps |k| <= max_frequency.
PeriodicBlockOperator truncate(const PeriodicBlockOperator& x, int max_frequency);

/// w_r(k) = 2^r max{|k|^r, 1}.
struct WeightSequence {
    double r = 0.0;
    double operator()(int k) const;
};

/// ||V||_r = sup_m sum_k sum_n ||V(k,m,n)|| max{|k|^r, 1}.
double norm_r(const PeriodicBlockOperator& v, double r);
/// sup_m sum_k sum_n ||V(k,m,n)|| <k>^{r1} <m-n>^{r2}, <x> = sqrt(1 + x^2).
double norm_r1r2(const PeriodicBlockOperator& v, double r1, double r2);
/// |||V|||_r = sup_{m,n} sum_k ||V(k,m,n)|| max{|k|^r, 1}.
double triple_norm_r(const PeriodicBlockOperator& v, double r);
/// ||w V||_0 = sup_m sum_k sum_n w(k) ||V(k,m,n)||.
double weighted_norm(const PeriodicBlockOperator& v, const WeightSequence& w);
/// |||w V|||_0 = sup_{m,n} sum_k w(k) ||V(k,m,n)||.
double weighted_triple_norm(const PeriodicBlockOperator& v, const WeightSequence& w);

struct FourierResult {
    PeriodicBlockOperator v;
    /// Largest entrywise change made when enforcing V(-k,n,m) = V(k,m,n)^*.
    double symmetry_defect = 0.0;
    /// max_{|k| = K} ||V_k|| / max_k ||V_k||, block norms summed per k.
    double top_ratio = 0.0;
    bool aliasing_warning = false;
};

using BlockSampler = std::function<BlockOperator(double)>;

/// Fourier blocks V(k,m,n) = (1/2pi) int e^{-ikt} P_m V(t) P_n dt by the periodic
/// trapezoidal rule on `grid_size` points, |k| <= k_max.
FourierResult fourier_blocks(const BlockSampler& sampler, int k_max, int grid_size);

/// Frequency-dependent family for the divided-difference norm.
using FrequencyFamily = std::function<PeriodicBlockOperator(double)>;

struct OmegaNormResult {
    double value = 0.0;  ///< grid lower bound of the sup
    double omega = 0.0;  ///< maximizing pair
    double omega_prime = 0.0;
};

/// sup over grid pairs w != w' of sup_m sum_{k,n} (||V_kmn(w)|| + omega0 ||(V_kmn(w) - V_kmn(w'))/(w - w')||) max{|k|^r,1}.
OmegaNormResult norm_r_omega(const FrequencyFamily& family, double r, double omega0, const std::vector<double>& grid);

struct FloquetAssemblyOptions {
    /// Refuse assemblies larger than this dimension.
    long dimension_cap = 6000;
};

/// Dense K_0 + V on the basis ordered by (k = -K..K, block, index in block):
/// diagonal blocks omega k + E_n, coupling V(k - k', m, n).
Matrix assemble_floquet(const GradedSpace& space, const PeriodicBlockOperator& v, double omega, int k_max,
                        const FloquetAssemblyOptions& options = {});

/// Position of (k, block n, index i) in the assembly.
long floquet_index(const GradedSpace& space, int k_max, int k, int n, int i);

struct FloquetPairCertificate {
    int k;
    int m;
    int n;
    SylvesterCertificate certificate;
};

struct FloquetStepResult {
    PeriodicBlockOperator w;
    std::vector<FloquetPairCertificate> certificates;
};

/// Solves (omega k + E_m + G(m)) W(k,m,n) - W(k,m,n) (E_n + G(n)) = V(k,m,n) for every
/// stored (k,m,n) except k = 0, m = n. Throws ResonanceError listing every triple whose
/// divisor falls below the floor.
FloquetStepResult floquet_commutator_step(const GradedSpace& space, const BlockOperator& g_diag,
                                          const PeriodicBlockOperator& v, double omega,
                                          const SylvesterOptions& options = {});

struct TimeDependentOptions {
    /// Reference frequency; defaults to 8 omega / 9, the smallest omega0 with omega in Omega_0.
    std::optional<double> omega0;
    /// Pointwise iteration settings (tolerance, unsafe flag, ...).
    PdmOptions pdm;
    /// Limit on the summed coefficient error between time grids T and 2T, and on the dropped tail.
    double coefficient_tol = 1e-11;
    double reconstruction_tol = 1e-6;
    int initial_grid = 32;
    int max_grid = 1024;
};

struct RegularizedPerturbation {
    PeriodicBlockOperator j;
    PeriodicBlockOperator g;
    PeriodicBlockOperator jdot;
    /// G - i omega J^* J'.
    PeriodicBlockOperator v_tilde;

    double omega = 0.0;
    double omega0 = 0.0;
    double r = 0.0;
    double delta_e = 0.0;
    int grid_size = 0;
    double grid_difference = 0.0;  ///< coefficient change from T/2 to T points
    double dropped_tail = 0.0;

    double weighted_v = 0.0;  ///< |||w_r V|||_0
    double triple_v = 0.0;    ///< |||V|||_r
    double x1 = 0.0;          ///< pi |||w_r V|||_0 / Delta E
    double jdot_norm = 0.0;   ///< ||w_{r-1} J'||_0
    double jdot_bound = 0.0;  ///< 3 pi |||w_r V|||_0 / Delta E
    double v_tilde_norm = 0.0;   ///< 2^{r-1} ||V~||_{r-1}
    double v_tilde_bound = 0.0;  ///< (1 + 8 omega0/Delta E) 2^r |||V|||_r
    double j_weighted = 0.0;     ///< ||w_r J||_0, reported only
    double g_weighted = 0.0;     ///< ||w_r G||_0
    double reconstruction_residual = 0.0;  ///< sum_k ||(J(H_0+G)J^* - H_0 - V)_k||
    double unitarity_residual = 0.0;       ///< sum_k ||(J J^* - 1)_k||
    double v_tilde_symmetry_defect = 0.0;
    double reconstruction_tol = 0.0;
    int max_iterations = 0;

    bool jdot_ok() const { return jdot_norm <= jdot_bound; }
    bool v_tilde_ok() const { return v_tilde_norm <= v_tilde_bound; }
    bool reconstruction_ok() const { return reconstruction_residual <= reconstruction_tol; }
    bool all_ok() const { return jdot_ok() && v_tilde_ok() && reconstruction_ok(); }
};

/// Diagonalizes H_0 + V(t) with the iteration at every point of a time grid and
/// returns the Fourier families J, G, J' and V~ = G - i omega J^* J'.
/// Throws ThresholdRefusal when |||w_r V|||_0 > Delta E / 8 unless options.pdm.unsafe,
/// TruncationError when the grid cannot resolve the families.
RegularizedPerturbation time_dependent_pdm(SpacePtr space, const PeriodicBlockOperator& v, double omega, double r,
                                           const TimeDependentOptions& options = {});

struct QuasiEnergyComparison {
    int compared = 0;
    double max_deviation = 0.0;
};

/// Matches the eigenvalues of the K_0 + A assembly whose eigenvectors carry at most
/// `edge_weight` outside |k| <= k_max/2 to the nearest eigenvalue of the K_0 + B assembly.
QuasiEnergyComparison compare_quasi_energies(const GradedSpace& space, const PeriodicBlockOperator& a,
                                             const PeriodicBlockOperator& b, double omega, int k_max,
                                             double edge_weight = 1e-10);

/// Fourier blocks of t -> phi(t) phi(t)^* for a Floquet eigenvector phi of an assembly
/// with truncation k_max: P(k) = sum_l phi_{k+l} phi_l^*.
PeriodicBlockOperator eigenprojection_family(const SpacePtr& space, const Vector& phi, int k_max);

struct PropagatorOptions {
    /// Defaults to 2 pi / (64 max(K,1) omega), K the largest driving harmonic.
    std::optional<double> dt;
    double norm_tol = 1e-6;
    /// Record the energy every this many steps.
    int record_every = 1;
};

struct PropagatorState {
    std::vector<double> times;
    std::vector<double> energy;  ///< (H_0 psi, psi)(t)
    std::vector<double> norm;
    /// tail_initial[n] = ||sum_{m >= n} P_m psi(0)||, tail_sup[n] its sup over the horizon.
    std::vector<double> tail_initial;
    std::vector<double> tail_sup;
    double max_norm_drift = 0.0;
    double dt = 0.0;
    long steps = 0;
    Vector psi;  ///< final state
};

/// Integrates i psi' = (H_0 + V(omega t)) psi with the exponential midpoint rule on the
/// dense truncated assembly. Throws IntegratorError when ||psi|| drifts by more than norm_tol.
PropagatorState simulate_propagator(const GradedSpace& space, const PeriodicBlockOperator& v, double omega,
                                    const Vector& psi0, double horizon, const PropagatorOptions& options = {});

}  // namespace pdm
