#pragma once

#include <map>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "pdm/types.hpp"

namespace pdm {

/// Truncated orthogonal decomposition H = (+)_n H_n with H_0 acting as the
/// Hermitian block E_n on H_n. Blocks are indexed 0..N-1 in the order given.
class GradedSpace {
public:
    explicit GradedSpace(std::vector<Matrix> energies, double hermitian_tol = 1e-12);

    /// Scalar blocks E_n = energies[n] * identity of size dims[n].
    static GradedSpace scalar(std::span<const double> energies, std::span<const int> dims);

    int block_count() const { return static_cast<int>(energies_.size()); }
    int dim(int n) const { return static_cast<int>(energies_[n].rows()); }
    int offset(int n) const { return offsets_[n]; }
    int total_dim() const { return offsets_.back(); }

    const Matrix& energy(int n) const { return energies_[n]; }
    /// Ascending eigenvalues of E_n.
    const RealVector& spectrum(int n) const { return spectra_[n]; }
    double max_eigenvalue() const;

    /// Dense H_0 on the retained blocks.
    Matrix dense_h0() const;

    bool same_layout(const GradedSpace& other) const;

private:
    std::vector<Matrix> energies_;
    std::vector<RealVector> spectra_;
    std::vector<int> offsets_;
};

using SpacePtr = std::shared_ptr<const GradedSpace>;

template <class... Args>
SpacePtr make_space(Args&&... args) {
    return std::make_shared<const GradedSpace>(std::forward<Args>(args)...);
}

/// Sparse block matrix over a graded space: (m, n) -> dense M_m x M_n block.
/// Absent blocks are zero; entries iterate row-major in (m, n).
class BlockOperator {
public:
    using Key = std::pair<int, int>;

    explicit BlockOperator(SpacePtr space);

    static BlockOperator identity(SpacePtr space);
    /// H_0 as a block-diagonal operator.
    static BlockOperator energy(SpacePtr space);
    /// Re-block a dense matrix; exactly-zero blocks are dropped.
    static BlockOperator from_dense(SpacePtr space, const Matrix& dense);

    const GradedSpace& space() const { return *space_; }
    const SpacePtr& space_ptr() const { return space_; }

    void set(int m, int n, Matrix block);
    void add(int m, int n, const Matrix& block);
    void erase(int m, int n) { entries_.erase({m, n}); }

    const Matrix* find(int m, int n) const;
    /// Block (m, n), materialized as zeros when absent.
    Matrix block(int m, int n) const;
    const std::map<Key, Matrix>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }

    Matrix to_dense() const;

    bool is_diagonal() const;
    bool is_symmetric(double tol = 1e-12) const;
    bool is_antisymmetric(double tol = 1e-12) const;
    /// max over (m, n) of |X(n,m) - sign * X(m,n)^*| entrywise.
    double symmetry_defect(int sign) const;

    BlockOperator& operator+=(const BlockOperator& other);
    BlockOperator& operator-=(const BlockOperator& other);
    BlockOperator& operator*=(Complex s);

    friend BlockOperator operator+(BlockOperator a, const BlockOperator& b) { return a += b; }
    friend BlockOperator operator-(BlockOperator a, const BlockOperator& b) { return a -= b; }
    friend BlockOperator operator*(Complex s, BlockOperator a) { return a *= s; }

private:
    void check_shape(int m, int n, const Matrix& block) const;
    void check_compatible(const BlockOperator& other) const;

    SpacePtr space_;
    std::map<Key, Matrix> entries_;
};

/// Exponents of the B^{q,p} family that the library evaluates.
enum class NormIndex { one, two, infinity };

/// ||X||_{q,p} for (q,p) in {(inf,1), (1,1), (inf,inf), (2,2)}; block norms are spectral.
double norm_qp(const BlockOperator& x, NormIndex q, NormIndex p);

inline double norm_inf1(const BlockOperator& x) { return norm_qp(x, NormIndex::infinity, NormIndex::one); }
inline double norm_11(const BlockOperator& x) { return norm_qp(x, NormIndex::one, NormIndex::one); }
inline double norm_infinf(const BlockOperator& x) { return norm_qp(x, NormIndex::infinity, NormIndex::infinity); }
/// Operator norm of the dense assembly.
inline double norm_22(const BlockOperator& x) { return norm_qp(x, NormIndex::two, NormIndex::two); }

/// max(||X||_{1,1}, ||X||_{inf,inf}).
double norm_sh(const BlockOperator& x);

struct DiagonalSplit {
    BlockOperator diagonal;
    BlockOperator offdiagonal;
};

DiagonalSplit split_diagonal(const BlockOperator& x);

BlockOperator compose(const BlockOperator& x, const BlockOperator& y);
BlockOperator adjoint(const BlockOperator& x);
/// ad_X Y = XY - YX.
BlockOperator commutator(const BlockOperator& x, const BlockOperator& y);

/// e^W for antisymmetric W, through the Hermitian generator -iW.
/// Throws PreconditionError if W is not antisymmetric and ConvergenceError if
/// the unitarity defect ||UU^* - I|| exceeds `tol`.
BlockOperator exp_antisymmetric(const BlockOperator& w, double tol = 1e-12);

/// Dense e^W - I for a skew-Hermitian matrix; entries stay accurate relative to ||W||.
Matrix expm1_skew_hermitian(const Matrix& w);

/// ||(I+X)(I+X)^* - I||_2 evaluated without forming I+X.
double unitarity_defect_from_increment(const Matrix& x);

}  // namespace pdm
