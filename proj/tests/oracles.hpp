#pragma once

// Reference computations for the tests. Nothing here calls into the library's
// numerics; only the container types are shared.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <complex>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "pdm/block_algebra.hpp"
#include "pdm/floquet.hpp"

namespace oracle {

using pdm::Complex;
using pdm::Matrix;
using Wide = boost::multiprecision::cpp_bin_float_50;

inline double svd_norm(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

inline std::vector<int> offsets(const pdm::GradedSpace& s) {
    std::vector<int> off{0};
    for (int n = 0; n < s.block_count(); ++n) off.push_back(off.back() + static_cast<int>(s.energy(n).rows()));
    return off;
}

inline Matrix dense(const pdm::BlockOperator& x) {
    const auto off = offsets(x.space());
    Matrix d = Matrix::Zero(off.back(), off.back());
    for (int m = 0; m < x.space().block_count(); ++m)
        for (int n = 0; n < x.space().block_count(); ++n)
            if (const Matrix* b = x.find(m, n)) d.block(off[m], off[n], b->rows(), b->cols()) = *b;
    return d;
}

inline Matrix dense_h0(const pdm::GradedSpace& s) {
    const auto off = offsets(s);
    Matrix d = Matrix::Zero(off.back(), off.back());
    for (int n = 0; n < s.block_count(); ++n) d.block(off[n], off[n], off[n + 1] - off[n], off[n + 1] - off[n]) = s.energy(n);
    return d;
}

/// Block norm table computed from the dense matrix.
inline Eigen::MatrixXd block_norms(const pdm::BlockOperator& x) {
    const auto off = offsets(x.space());
    const Matrix d = dense(x);
    const int nb = x.space().block_count();
    Eigen::MatrixXd t(nb, nb);
    for (int m = 0; m < nb; ++m)
        for (int n = 0; n < nb; ++n)
            t(m, n) = svd_norm(d.block(off[m], off[n], off[m + 1] - off[m], off[n + 1] - off[n]));
    return t;
}

inline double inf1(const pdm::BlockOperator& x) { return block_norms(x).maxCoeff(); }
inline double col_sum(const pdm::BlockOperator& x) { return block_norms(x).colwise().sum().maxCoeff(); }
inline double row_sum(const pdm::BlockOperator& x) { return block_norms(x).rowwise().sum().maxCoeff(); }

inline Eigen::VectorXd eigenvalues(const Matrix& h) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

/// Solves AX - XB = Y through the Kronecker form (I (x) A - B^T (x) I) vec X = vec Y.
inline Matrix kron_sylvester(const Matrix& a, const Matrix& b, const Matrix& y) {
    const Eigen::Index p = a.rows(), q = b.rows();
    Matrix k = Matrix::Zero(p * q, p * q);
    for (Eigen::Index j = 0; j < q; ++j)
        for (Eigen::Index i = 0; i < q; ++i) {
            if (i == j) k.block(j * p, j * p, p, p) += a;
            k.block(j * p, i * p, p, p) -= b(i, j) * Matrix::Identity(p, p);
        }
    Eigen::Map<const pdm::Vector> vy(y.data(), p * q);
    const pdm::Vector vx = k.fullPivLu().solve(vy);
    return Eigen::Map<const Matrix>(vx.data(), p, q);
}

inline double brute_distance(const Matrix& a, const Matrix& b) {
    const auto ea = eigenvalues(a), eb = eigenvalues(b);
    double d = INFINITY;
    for (Eigen::Index i = 0; i < ea.size(); ++i)
        for (Eigen::Index j = 0; j < eb.size(); ++j) d = std::min(d, std::abs(ea(i) - eb(j)));
    return d;
}

inline Matrix random_hermitian(std::mt19937_64& rng, int n, double scale = 1.0) {
    std::normal_distribution<double> g;
    Matrix m(n, n);
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = Complex(g(rng), g(rng));
    return scale * 0.5 * (m + m.adjoint());
}

inline Matrix random_matrix(std::mt19937_64& rng, int r, int c) {
    std::normal_distribution<double> g;
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = Complex(g(rng), g(rng));
    return m;
}

/// Random symmetric offdiagonal operator with ||V||_{inf,1} = target.
inline pdm::BlockOperator random_symmetric(std::mt19937_64& rng, const pdm::SpacePtr& space, double target,
                                           double decay = 2.0) {
    pdm::BlockOperator v(space);
    const int nb = space->block_count();
    for (int m = 0; m < nb; ++m)
        for (int n = m + 1; n < nb; ++n) {
            Matrix b = random_matrix(rng, space->dim(m), space->dim(n)) / std::pow(1.0 + n - m, decay);
            v.set(m, n, b);
            v.set(n, m, b.adjoint());
        }
    v *= Complex(target / inf1(v));
    return v;
}

/// Scalar-block space with given energies and dims, dense random Hermitian perturbation of each block allowed.
inline pdm::SpacePtr scalar_space(const std::vector<double>& e, const std::vector<int>& dims) {
    std::vector<Matrix> blocks;
    for (std::size_t n = 0; n < e.size(); ++n)
        blocks.push_back(Matrix::Identity(dims[n], dims[n]) * Complex(e[n]));
    return pdm::make_space(blocks);
}

// ---------------------------------------------------------------- scalars

inline Wide wide_pi() { return boost::math::constants::pi<Wide>(); }

/// Phi(x) = e^x - (e^x - 1)/x by its series sum_{k>=1} k x^k/(k+1)!, summed to 50 digits.
inline Wide wide_phi(const Wide& x) {
    Wide term = x / 2, sum = 0;  // term = x^k/(k+1)!
    for (int k = 1; k < 400; ++k) {
        const Wide add = k * term;
        sum += add;
        if (k > 5 && abs(add) < Wide("1e-60")) break;
        term *= x / (k + 2);
    }
    return sum;
}

struct WideMajorant {
    std::vector<Wide> x;
    Wide sum_x = 0, sum_x_phi = 0;
};

inline WideMajorant wide_majorant(const Wide& x1) {
    WideMajorant out;
    Wide x = x1;
    for (int s = 0; s < 200 && x > Wide("1e-80"); ++s) {
        out.x.push_back(x);
        const Wide p = wide_phi(2 * x);
        out.sum_x += x;
        out.sum_x_phi += x * p;
        x *= p;
    }
    return out;
}

// ------------------------------------------------------------ expressions

/// Recursive-descent evaluator for formula strings: + - * / ^, parentheses,
/// numbers, pi, e, exp(), min(,), and named variables.
class Expression {
public:
    Expression(std::string text, std::map<std::string, Wide> vars) : s_(std::move(text)), vars_(std::move(vars)) {}

    Wide value() {
        pos_ = 0;
        Wide v = sum();
        skip();
        if (pos_ != s_.size()) throw std::runtime_error("trailing input in '" + s_ + "'");
        return v;
    }

private:
    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool eat(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    Wide sum() {
        Wide v = product();
        for (;;) {
            if (eat('+'))
                v += product();
            else if (eat('-'))
                v -= product();
            else
                return v;
        }
    }
    Wide product() {
        Wide v = power();
        for (;;) {
            if (eat('*'))
                v *= power();
            else if (eat('/'))
                v /= power();
            else
                return v;
        }
    }
    Wide power() {
        Wide base = unary();
        if (eat('^')) return boost::multiprecision::pow(base, power());
        return base;
    }
    Wide unary() {
        if (eat('-')) return -unary();
        return atom();
    }
    Wide atom() {
        skip();
        if (eat('(')) {
            Wide v = sum();
            if (!eat(')')) throw std::runtime_error("missing ')'");
            return v;
        }
        if (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) {
            std::size_t end = pos_;
            while (end < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[end])) || s_[end] == '.')) ++end;
            Wide v(s_.substr(pos_, end - pos_));
            pos_ = end;
            return v;
        }
        std::size_t end = pos_;
        while (end < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[end])) || s_[end] == '_')) ++end;
        const std::string name = s_.substr(pos_, end - pos_);
        if (name.empty()) throw std::runtime_error("unexpected character in '" + s_ + "'");
        pos_ = end;
        if (name == "exp" || name == "min") {
            if (!eat('(')) throw std::runtime_error("missing '(' after " + name);
            Wide a = sum();
            if (name == "exp") {
                if (!eat(')')) throw std::runtime_error("missing ')'");
                return boost::multiprecision::exp(a);
            }
            if (!eat(',')) throw std::runtime_error("min takes two arguments");
            Wide b = sum();
            if (!eat(')')) throw std::runtime_error("missing ')'");
            return a < b ? a : b;
        }
        if (name == "pi") return wide_pi();
        if (name == "e") return boost::math::constants::e<Wide>();
        auto it = vars_.find(name);
        if (it == vars_.end()) throw std::runtime_error("unknown name " + name);
        return it->second;
    }

    std::string s_;
    std::map<std::string, Wide> vars_;
    std::size_t pos_ = 0;
};

inline double eval(const std::string& text, std::map<std::string, Wide> vars = {}) {
    return static_cast<double>(Expression(text, std::move(vars)).value());
}

inline const char* kFormulaC = "25223*pi*(2*s+1)^3*(2*(2*s+1)/(e*(1-exp(-4/(2*s+1)))))^(s+0.5)";
inline const char* kFormulaC2 = "C/min(r-s-0.5, 7/8*(2*s+1))^3";

inline double formula_C(double sigma) { return eval(kFormulaC, {{"s", Wide(sigma)}}); }
inline double formula_C2(double sigma, double r) {
    const Wide c(Expression(kFormulaC, {{"s", Wide(sigma)}}).value());
    return eval(kFormulaC2, {{"C", c}, {"s", Wide(sigma)}, {"r", Wide(r)}});
}

// ------------------------------------------------------------------ series

/// sum_{n >= 2} 1/(n^2 - 1) restricted to n < N, by telescoping.
inline double rotor_row_one(int n_max) {
    return 1.0 + 0.5 * (1.0 + 0.5 - 1.0 / (n_max - 1) - 1.0 / n_max);
}

/// Floquet assembly written out entry by entry with (k, block, i) -> index via a table.
inline Matrix floquet_dense(const pdm::GradedSpace& s, const pdm::PeriodicBlockOperator& v, double omega, int kmax) {
    const auto off = offsets(s);
    const int dim = off.back();
    const int size = (2 * kmax + 1) * dim;
    Matrix k = Matrix::Zero(size, size);
    auto index = [&](int kk, int n, int i) { return (kk + kmax) * dim + off[n] + i; };
    for (int kk = -kmax; kk <= kmax; ++kk)
        for (int n = 0; n < s.block_count(); ++n)
            for (int i = 0; i < s.dim(n); ++i)
                for (int j = 0; j < s.dim(n); ++j)
                    k(index(kk, n, i), index(kk, n, j)) = s.energy(n)(i, j) + (i == j ? omega * kk : 0.0);
    for (int kk = -kmax; kk <= kmax; ++kk)
        for (int kp = -kmax; kp <= kmax; ++kp) {
            const pdm::BlockOperator* c = v.find(kk - kp);
            if (!c) continue;
            for (const auto& [key, b] : c->entries())
                for (Eigen::Index i = 0; i < b.rows(); ++i)
                    for (Eigen::Index j = 0; j < b.cols(); ++j)
                        k(index(kk, key.first, static_cast<int>(i)), index(kp, key.second, static_cast<int>(j))) += b(i, j);
        }
    return k;
}

}  // namespace oracle
