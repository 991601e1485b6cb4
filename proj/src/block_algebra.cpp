#include "pdm/block_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pdm/errors.hpp"

namespace pdm {

// ---------------------------------------------------------------- GradedSpace

GradedSpace::GradedSpace(std::vector<Matrix> energies, double hermitian_tol)
    : energies_(std::move(energies)) {
    if (energies_.empty()) throw StructuralError("graded space needs at least one block");
    offsets_.reserve(energies_.size() + 1);
    offsets_.push_back(0);
    spectra_.reserve(energies_.size());
    for (std::size_t n = 0; n < energies_.size(); ++n) {
        const Matrix& e = energies_[n];
        if (e.rows() == 0 || e.rows() != e.cols())
            throw StructuralError("energy block " + std::to_string(n) + " must be square and nonempty");
        if (!e.allFinite()) throw PreconditionError("energy block " + std::to_string(n) + " is not finite");
        const double defect = hermitian_defect(e);
        if (defect > hermitian_tol) {
            std::ostringstream msg;
            msg << "energy block " << n << " is not Hermitian (defect " << defect << ")";
            throw PreconditionError(msg.str());
        }
        spectra_.push_back(hermitian_eigenvalues(e));
        offsets_.push_back(offsets_.back() + static_cast<int>(e.rows()));
    }
}

GradedSpace GradedSpace::scalar(std::span<const double> energies, std::span<const int> dims) {
    if (energies.size() != dims.size()) throw StructuralError("energies and dimensions differ in length");
    std::vector<Matrix> blocks;
    blocks.reserve(energies.size());
    for (std::size_t n = 0; n < energies.size(); ++n) {
        if (dims[n] <= 0) throw StructuralError("block dimensions must be positive");
        blocks.push_back(energies[n] * Matrix::Identity(dims[n], dims[n]));
    }
    return GradedSpace(std::move(blocks));
}

double GradedSpace::max_eigenvalue() const {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& s : spectra_) best = std::max(best, s(s.size() - 1));
    return best;
}

Matrix GradedSpace::dense_h0() const {
    Matrix h = Matrix::Zero(total_dim(), total_dim());
    for (int n = 0; n < block_count(); ++n) h.block(offset(n), offset(n), dim(n), dim(n)) = energies_[n];
    return h;
}

bool GradedSpace::same_layout(const GradedSpace& other) const {
    if (this == &other) return true;
    if (block_count() != other.block_count()) return false;
    for (int n = 0; n < block_count(); ++n)
        if (dim(n) != other.dim(n)) return false;
    return true;
}

// -------------------------------------------------------------- BlockOperator

BlockOperator::BlockOperator(SpacePtr space) : space_(std::move(space)) {
    if (!space_) throw StructuralError("block operator needs a space");
}

BlockOperator BlockOperator::identity(SpacePtr space) {
    BlockOperator out(std::move(space));
    for (int n = 0; n < out.space().block_count(); ++n)
        out.entries_.emplace(Key{n, n}, Matrix::Identity(out.space().dim(n), out.space().dim(n)));
    return out;
}

BlockOperator BlockOperator::energy(SpacePtr space) {
    BlockOperator out(std::move(space));
    for (int n = 0; n < out.space().block_count(); ++n) out.entries_.emplace(Key{n, n}, out.space().energy(n));
    return out;
}

BlockOperator BlockOperator::from_dense(SpacePtr space, const Matrix& dense) {
    BlockOperator out(std::move(space));
    const GradedSpace& s = out.space();
    if (dense.rows() != s.total_dim() || dense.cols() != s.total_dim())
        throw StructuralError("dense matrix does not match the graded space dimension");
    for (int m = 0; m < s.block_count(); ++m) {
        for (int n = 0; n < s.block_count(); ++n) {
            Matrix b = dense.block(s.offset(m), s.offset(n), s.dim(m), s.dim(n));
            if (!b.isZero(0.0)) out.entries_.emplace(Key{m, n}, std::move(b));
        }
    }
    return out;
}

void BlockOperator::check_shape(int m, int n, const Matrix& block) const {
    const int count = space_->block_count();
    if (m < 0 || n < 0 || m >= count || n >= count)
        throw StructuralError("block index (" + std::to_string(m) + "," + std::to_string(n) + ") out of range");
    if (block.rows() != space_->dim(m) || block.cols() != space_->dim(n))
        throw StructuralError("block (" + std::to_string(m) + "," + std::to_string(n) + ") has shape " +
                              std::to_string(block.rows()) + "x" + std::to_string(block.cols()) +
                              ", expected " + std::to_string(space_->dim(m)) + "x" +
                              std::to_string(space_->dim(n)));
}

void BlockOperator::check_compatible(const BlockOperator& other) const {
    if (!space_->same_layout(other.space())) throw StructuralError("operators live on different graded spaces");
}

void BlockOperator::set(int m, int n, Matrix block) {
    check_shape(m, n, block);
    entries_[{m, n}] = std::move(block);
}

void BlockOperator::add(int m, int n, const Matrix& block) {
    check_shape(m, n, block);
    auto [it, inserted] = entries_.try_emplace(Key{m, n}, block);
    if (!inserted) it->second += block;
}

const Matrix* BlockOperator::find(int m, int n) const {
    auto it = entries_.find({m, n});
    return it == entries_.end() ? nullptr : &it->second;
}

Matrix BlockOperator::block(int m, int n) const {
    if (const Matrix* b = find(m, n)) return *b;
    return Matrix::Zero(space_->dim(m), space_->dim(n));
}

Matrix BlockOperator::to_dense() const {
    const GradedSpace& s = *space_;
    Matrix out = Matrix::Zero(s.total_dim(), s.total_dim());
    for (const auto& [key, b] : entries_)
        out.block(s.offset(key.first), s.offset(key.second), b.rows(), b.cols()) = b;
    return out;
}

bool BlockOperator::is_diagonal() const {
    return std::all_of(entries_.begin(), entries_.end(), [](const auto& e) { return e.first.first == e.first.second; });
}

double BlockOperator::symmetry_defect(int sign) const {
    double worst = 0.0;
    for (const auto& [key, b] : entries_) {
        const auto [m, n] = key;
        const Matrix mirror = block(n, m);
        worst = std::max(worst, (mirror - static_cast<double>(sign) * b.adjoint()).cwiseAbs().maxCoeff());
    }
    return worst;
}

bool BlockOperator::is_symmetric(double tol) const { return symmetry_defect(+1) <= tol; }
bool BlockOperator::is_antisymmetric(double tol) const { return symmetry_defect(-1) <= tol; }

BlockOperator& BlockOperator::operator+=(const BlockOperator& other) {
    check_compatible(other);
    for (const auto& [key, b] : other.entries_) add(key.first, key.second, b);
    return *this;
}

BlockOperator& BlockOperator::operator-=(const BlockOperator& other) {
    check_compatible(other);
    for (const auto& [key, b] : other.entries_) add(key.first, key.second, -b);
    return *this;
}

BlockOperator& BlockOperator::operator*=(Complex s) {
    for (auto& [key, b] : entries_) b *= s;
    return *this;
}

// ---------------------------------------------------------------------- norms

namespace {

// Lower blocks are measured through their adjoint, so X(n,m) = X(m,n)^* gives
// bit-identical norms for both.
double block_norm(const BlockOperator::Key& key, const Matrix& b) {
    if (key.first <= key.second) return spectral_norm(b);
    return spectral_norm(Matrix(b.adjoint()));
}

}  // namespace

double norm_qp(const BlockOperator& x, NormIndex q, NormIndex p) {
    using enum NormIndex;
    if (q == two && p == two) {
        const Matrix d = x.to_dense();
        if (d.size() == 0) return 0.0;
        Eigen::BDCSVD<Matrix> svd(d);
        return svd.singularValues()(0);
    }
    const int count = x.space().block_count();
    if (q == infinity && p == one) {
        double best = 0.0;
        for (const auto& [key, b] : x.entries()) best = std::max(best, block_norm(key, b));
        return best;
    }
    if ((q == one && p == one) || (q == infinity && p == infinity)) {
        const bool columns = q == one;
        std::vector<double> sums(count, 0.0);
        for (const auto& [key, b] : x.entries()) sums[columns ? key.second : key.first] += block_norm(key, b);
        return *std::max_element(sums.begin(), sums.end());
    }
    throw UsageError("unsupported (q,p) norm pair; available: (inf,1), (1,1), (inf,inf), (2,2)");
}

double norm_sh(const BlockOperator& x) { return std::max(norm_11(x), norm_infinf(x)); }

// ----------------------------------------------------------------- operations

DiagonalSplit split_diagonal(const BlockOperator& x) {
    DiagonalSplit out{BlockOperator(x.space_ptr()), BlockOperator(x.space_ptr())};
    for (const auto& [key, b] : x.entries()) {
        if (key.first == key.second)
            out.diagonal.set(key.first, key.second, b);
        else
            out.offdiagonal.set(key.first, key.second, b);
    }
    return out;
}

BlockOperator compose(const BlockOperator& x, const BlockOperator& y) {
    if (!x.space().same_layout(y.space())) throw StructuralError("compose: operators live on different graded spaces");
    BlockOperator out(x.space_ptr());
    const auto& ye = y.entries();
    for (const auto& [kx, bx] : x.entries()) {
        const int k = kx.second;
        for (auto it = ye.lower_bound({k, -1}); it != ye.end() && it->first.first == k; ++it)
            out.add(kx.first, it->first.second, bx * it->second);
    }
    return out;
}

BlockOperator adjoint(const BlockOperator& x) {
    BlockOperator out(x.space_ptr());
    for (const auto& [key, b] : x.entries()) out.set(key.second, key.first, b.adjoint());
    return out;
}

BlockOperator commutator(const BlockOperator& x, const BlockOperator& y) { return compose(x, y) - compose(y, x); }

Matrix expm1_skew_hermitian(const Matrix& w) {
    if (w.size() == 0) return w;
    const Complex minus_i(0.0, -1.0);
    Matrix h = minus_i * w;
    h = 0.5 * (h + h.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    const RealVector& lambda = es.eigenvalues();
    Vector phase(lambda.size());
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        const double s = std::sin(0.5 * lambda(i));
        phase(i) = Complex(-2.0 * s * s, std::sin(lambda(i)));
    }
    const Matrix& q = es.eigenvectors();
    return q * phase.asDiagonal() * q.adjoint();
}

double unitarity_defect_from_increment(const Matrix& x) {
    if (x.size() == 0) return 0.0;
    const Matrix d = x + x.adjoint() + x * x.adjoint();
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (d + d.adjoint()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

BlockOperator exp_antisymmetric(const BlockOperator& w, double tol) {
    const double defect = w.symmetry_defect(-1);
    if (defect > 1e-12) {
        std::ostringstream msg;
        msg << "exp_antisymmetric: operator is not antisymmetric (defect " << defect << ")";
        throw PreconditionError(msg.str());
    }
    const Matrix x = expm1_skew_hermitian(w.to_dense());
    const double unitarity = unitarity_defect_from_increment(x);
    if (unitarity > tol) {
        std::ostringstream msg;
        msg << "exp_antisymmetric: unitarity defect " << unitarity << " exceeds " << tol;
        throw ConvergenceError(msg.str());
    }
    Matrix u = x;
    u.diagonal().array() += 1.0;
    return BlockOperator::from_dense(w.space_ptr(), u);
}

}  // namespace pdm
