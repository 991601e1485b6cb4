#pragma once

#include <complex>

#include <Eigen/Dense>

namespace pdm {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Largest singular value of a dense block (0 for empty blocks).
double spectral_norm(const Matrix& block);

/// Max absolute entrywise deviation from hermiticity.
double hermitian_defect(const Matrix& a);

/// Ascending eigenvalues of a Hermitian matrix.
RealVector hermitian_eigenvalues(const Matrix& a);

/// min |a_i - b_j| over two ascending real sequences.
double sorted_distance(const RealVector& a, const RealVector& b);

}  // namespace pdm
