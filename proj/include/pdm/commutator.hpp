#pragma once

#include <optional>
#include <vector>

#include "pdm/block_algebra.hpp"

namespace pdm {

struct HermitianEigen {
    RealVector values;  ///< ascending
    Matrix vectors;     ///< columns are eigenvectors
};

HermitianEigen hermitian_eigen(const Matrix& a);

struct SylvesterOptions {
    /// Solves refuse when dist(spec A, spec B) falls below this.
    double distance_floor = 1e-10;
    /// Residual limit relative to ||Y||; never disabled.
    double residual_tol = 1e-10;
    /// Check ||X|| <= (pi/2) ||Y|| / d_{A,B} and throw on violation.
    bool assert_bound = true;
};

/// Certificate of one solve of AX - XB = Y. Norms are spectral.
struct SylvesterCertificate {
    double spectral_distance = 0.0;
    double solution_norm = 0.0;
    double rhs_norm = 0.0;
    /// (pi/2) ||Y|| / d_{A,B}
    double bound = 0.0;
    double residual_norm = 0.0;

    bool bound_holds() const;
};

struct SylvesterSolution {
    Matrix x;
    SylvesterCertificate certificate;
};

/// min |a_i - b_j| over the spectra of two Hermitian matrices.
/// Throws SpectraOverlapError below `floor`.
double spectral_distance(const Matrix& a, const Matrix& b, double floor = 1e-10);

/// Solves AX - XB = Y for Hermitian A, B by division in the eigenbases.
SylvesterSolution solve_sylvester(const Matrix& a, const Matrix& b, const Matrix& y,
                                  const SylvesterOptions& options = {});

/// Same, reusing precomputed eigendecompositions of A and B.
SylvesterSolution solve_sylvester(const Matrix& a, const HermitianEigen& ea, const Matrix& b,
                                  const HermitianEigen& eb, const Matrix& y, const SylvesterOptions& options = {});

struct BlockCommutatorOptions {
    SylvesterOptions sylvester;
    /// When set, asserts ||W||_SH <= pi ||V||_{inf,1} * inverse_gap_sum.
    std::optional<double> inverse_gap_sum;
};

struct PairCertificate {
    int m;
    int n;
    SylvesterCertificate certificate;
};

struct BlockCommutatorSolution {
    BlockOperator w;
    std::vector<PairCertificate> certificates;
    double w_sh_norm = 0.0;
    /// pi ||V||_{inf,1} / Delta E, or +inf when no gap sum was supplied.
    double sh_bound = 0.0;
};

/// Solves (E_m + G(m)) W(m,n) - W(m,n) (E_n + G(n)) = V(m,n) for every stored
/// entry of the offdiagonal symmetric V; `h_diag` holds the blocks E_m + G(m).
BlockCommutatorSolution solve_block_commutator(const BlockOperator& h_diag, const BlockOperator& v,
                                               const BlockCommutatorOptions& options = {});

}  // namespace pdm
