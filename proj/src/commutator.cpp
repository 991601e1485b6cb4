#include "pdm/commutator.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "pdm/errors.hpp"

namespace pdm {

namespace {

constexpr double kHalfPi = 0.5 * std::numbers::pi;

void require_hermitian(const Matrix& a, const char* name) {
    if (a.rows() != a.cols()) throw StructuralError(std::string(name) + " must be square");
    const double defect = hermitian_defect(a);
    if (defect > 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff())) {
        std::ostringstream msg;
        msg << name << " is not Hermitian (defect " << defect << ")";
        throw PreconditionError(msg.str());
    }
}

}  // namespace

HermitianEigen hermitian_eigen(const Matrix& a) {
    if (a.rows() == 1) return {RealVector::Constant(1, a(0, 0).real()), Matrix::Identity(1, 1)};
    Eigen::SelfAdjointEigenSolver<Matrix> es(a);
    if (es.info() != Eigen::Success) throw NumericalFailure("Hermitian eigensolver failed");
    return {es.eigenvalues(), es.eigenvectors()};
}

bool SylvesterCertificate::bound_holds() const {
    return solution_norm <= bound * (1.0 + 1e-10) + std::numeric_limits<double>::min();
}

double spectral_distance(const Matrix& a, const Matrix& b, double floor) {
    require_hermitian(a, "A");
    require_hermitian(b, "B");
    const double d = sorted_distance(hermitian_eigenvalues(a), hermitian_eigenvalues(b));
    if (!(d >= floor)) {
        std::ostringstream msg;
        msg << "spectra overlap: distance " << d << " below floor " << floor;
        throw SpectraOverlapError(msg.str(), d);
    }
    return d;
}

SylvesterSolution solve_sylvester(const Matrix& a, const Matrix& b, const Matrix& y,
                                  const SylvesterOptions& options) {
    require_hermitian(a, "A");
    require_hermitian(b, "B");
    return solve_sylvester(a, hermitian_eigen(a), b, hermitian_eigen(b), y, options);
}

SylvesterSolution solve_sylvester(const Matrix& a, const HermitianEigen& ea, const Matrix& b,
                                  const HermitianEigen& eb, const Matrix& y, const SylvesterOptions& options) {
    if (y.rows() != a.rows() || y.cols() != b.rows())
        throw StructuralError("Sylvester right-hand side has the wrong shape");
    SylvesterSolution out;
    SylvesterCertificate& cert = out.certificate;
    cert.spectral_distance = sorted_distance(ea.values, eb.values);
    if (!(cert.spectral_distance >= options.distance_floor)) {
        std::ostringstream msg;
        msg << "spectra overlap: distance " << cert.spectral_distance << " below floor " << options.distance_floor;
        throw SpectraOverlapError(msg.str(), cert.spectral_distance);
    }

    Matrix t = ea.vectors.adjoint() * y * eb.vectors;
    for (Eigen::Index j = 0; j < t.cols(); ++j)
        for (Eigen::Index i = 0; i < t.rows(); ++i) t(i, j) /= ea.values(i) - eb.values(j);
    out.x = ea.vectors * t * eb.vectors.adjoint();

    cert.rhs_norm = spectral_norm(y);
    cert.solution_norm = spectral_norm(out.x);
    cert.bound = kHalfPi * cert.rhs_norm / cert.spectral_distance;
    cert.residual_norm = spectral_norm(a * out.x - out.x * b - y);

    if (!(cert.residual_norm <= options.residual_tol * cert.rhs_norm)) {
        std::ostringstream msg;
        msg << "Sylvester residual " << cert.residual_norm << " exceeds " << options.residual_tol << " * ||Y|| = "
            << options.residual_tol * cert.rhs_norm;
        throw NumericalFailure(msg.str());
    }
    if (options.assert_bound && !cert.bound_holds()) {
        std::ostringstream msg;
        msg << "Sylvester solution norm " << cert.solution_norm << " exceeds (pi/2)||Y||/d = " << cert.bound;
        throw NumericalFailure(msg.str());
    }
    return out;
}

BlockCommutatorSolution solve_block_commutator(const BlockOperator& h_diag, const BlockOperator& v,
                                               const BlockCommutatorOptions& options) {
    if (!h_diag.space().same_layout(v.space()))
        throw StructuralError("solve_block_commutator: operators live on different spaces");
    if (!h_diag.is_diagonal()) throw PreconditionError("solve_block_commutator: H must be block diagonal");
    const double sym = v.symmetry_defect(+1);
    if (sym > 1e-12) {
        std::ostringstream msg;
        msg << "solve_block_commutator: V is not symmetric (defect " << sym << ")";
        throw PreconditionError(msg.str());
    }

    const GradedSpace& space = v.space();
    const int nb = space.block_count();
    std::vector<Matrix> h(nb);
    std::vector<HermitianEigen> eig(nb);
    std::vector<bool> ready(nb, false);
    auto prepare = [&](int n) {
        if (ready[n]) return;
        h[n] = h_diag.block(n, n);
        require_hermitian(h[n], "diagonal block");
        eig[n] = hermitian_eigen(h[n]);
        ready[n] = true;
    };

    BlockCommutatorSolution out{BlockOperator(v.space_ptr()), {}, 0.0, 0.0};
    out.certificates.reserve(v.entries().size());
    for (const auto& [key, block] : v.entries()) {
        const auto [m, n] = key;
        if (m == n)
            throw PreconditionError("solve_block_commutator: V has a diagonal block (" + std::to_string(m) + "," +
                                    std::to_string(n) + ")");
        prepare(m);
        prepare(n);
        try {
            SylvesterSolution s = solve_sylvester(h[m], eig[m], h[n], eig[n], block, options.sylvester);
            out.certificates.push_back({m, n, s.certificate});
            out.w.set(m, n, std::move(s.x));
        } catch (const SpectraOverlapError& e) {
            throw SpectraOverlapError("block pair (" + std::to_string(m) + "," + std::to_string(n) + "): " + e.what(),
                                      e.distance());
        } catch (const NumericalFailure& e) {
            throw NumericalFailure("block pair (" + std::to_string(m) + "," + std::to_string(n) + "): " + e.what());
        }
    }

    const double anti = out.w.symmetry_defect(-1);
    if (anti > 1e-12) {
        std::ostringstream msg;
        msg << "solve_block_commutator: W is not antisymmetric (defect " << anti << ")";
        throw NumericalFailure(msg.str());
    }

    out.w_sh_norm = norm_sh(out.w);
    if (options.inverse_gap_sum) {
        out.sh_bound = std::numbers::pi * norm_inf1(v) * *options.inverse_gap_sum;
        if (options.sylvester.assert_bound && out.w_sh_norm > out.sh_bound * (1.0 + 1e-10)) {
            std::ostringstream msg;
            msg << "||W||_SH = " << out.w_sh_norm << " exceeds pi ||V||_{inf,1} / Delta E = " << out.sh_bound;
            throw NumericalFailure(msg.str());
        }
    } else {
        out.sh_bound = std::numeric_limits<double>::infinity();
    }
    return out;
}

}  // namespace pdm
