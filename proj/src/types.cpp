#include "pdm/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pdm {

double spectral_norm(const Matrix& block) {
    if (block.size() == 0) return 0.0;
    if (block.size() == 1) return std::abs(block(0, 0));
    if (block.rows() == 1 || block.cols() == 1) return block.norm();
    Eigen::JacobiSVD<Matrix> svd(block);
    return svd.singularValues()(0);
}

double hermitian_defect(const Matrix& a) {
    if (a.rows() != a.cols()) return std::numeric_limits<double>::infinity();
    return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

RealVector hermitian_eigenvalues(const Matrix& a) {
    if (a.size() == 0) return RealVector();
    Matrix off = a;
    off.diagonal().setZero();
    if ((off.array() == Complex(0.0)).all()) {
        RealVector d = a.diagonal().real();
        std::sort(d.data(), d.data() + d.size());
        return d;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

double sorted_distance(const RealVector& a, const RealVector& b) {
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        best = std::min(best, std::abs(a(i) - b(j)));
        if (a(i) < b(j))
            ++i;
        else
            ++j;
    }
    return best;
}

}  // namespace pdm
