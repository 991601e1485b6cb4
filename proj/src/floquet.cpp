#include "pdm/floquet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <unsupported/Eigen/FFT>

namespace pdm {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kEps = std::numeric_limits<double>::epsilon();

double max_abs(const Matrix& a) { return a.size() ? a.cwiseAbs().maxCoeff() : 0.0; }

double frequency_weight(int k, double r) {
    if (k == 0) return 1.0;
    return std::max(std::pow(std::abs(static_cast<double>(k)), r), 1.0);
}

/// Rows (or (m,n) pairs) of a weighted sum of block norms.
template <class Weight>
double row_sup(const PeriodicBlockOperator& v, Weight weight) {
    std::vector<double> rows(v.space().block_count(), 0.0);
    for (const auto& [k, x] : v.coefficients())
        for (const auto& [key, block] : x.entries()) rows[key.first] += weight(k, key.first, key.second) * spectral_norm(block);
    return rows.empty() ? 0.0 : *std::max_element(rows.begin(), rows.end());
}

template <class Weight>
double pair_sup(const PeriodicBlockOperator& v, Weight weight) {
    std::map<std::pair<int, int>, double> pairs;
    for (const auto& [k, x] : v.coefficients())
        for (const auto& [key, block] : x.entries()) pairs[key] += weight(k) * spectral_norm(block);
    double best = 0.0;
    for (const auto& [key, s] : pairs) best = std::max(best, s);
    return best;
}

}  // namespace

// ------------------------------------------------------------ PeriodicBlockOperator

PeriodicBlockOperator::PeriodicBlockOperator(SpacePtr space) : space_(std::move(space)) {
    if (!space_) throw StructuralError("periodic operator needs a graded space");
}

PeriodicBlockOperator PeriodicBlockOperator::constant(const BlockOperator& x) {
    PeriodicBlockOperator out(x.space_ptr());
    if (!x.empty()) out.set(0, x);
    return out;
}

void PeriodicBlockOperator::set(int k, BlockOperator x) {
    if (!x.space().same_layout(*space_)) throw StructuralError("Fourier coefficient lives on a different space");
    if (x.empty()) {
        coefficients_.erase(k);
        return;
    }
    coefficients_.insert_or_assign(k, std::move(x));
}

void PeriodicBlockOperator::add(int k, int m, int n, const Matrix& block) {
    auto it = coefficients_.find(k);
    if (it == coefficients_.end()) it = coefficients_.emplace(k, BlockOperator(space_)).first;
    it->second.add(m, n, block);
}

const BlockOperator* PeriodicBlockOperator::find(int k) const {
    auto it = coefficients_.find(k);
    return it == coefficients_.end() ? nullptr : &it->second;
}

BlockOperator PeriodicBlockOperator::coefficient(int k) const {
    const BlockOperator* x = find(k);
    return x ? *x : BlockOperator(space_);
}

int PeriodicBlockOperator::max_frequency() const {
    int k = 0;
    for (const auto& [q, x] : coefficients_) k = std::max(k, std::abs(q));
    return k;
}

BlockOperator PeriodicBlockOperator::at(double t) const {
    BlockOperator out(space_);
    for (const auto& [k, x] : coefficients_) out += std::polar(1.0, k * t) * x;
    return out;
}

Matrix PeriodicBlockOperator::dense_at(double t) const {
    const int d = space_->total_dim();
    Matrix out = Matrix::Zero(d, d);
    for (const auto& [k, x] : coefficients_) {
        const Complex phase = std::polar(1.0, k * t);
        for (const auto& [key, block] : x.entries())
            out.block(space_->offset(key.first), space_->offset(key.second), block.rows(), block.cols()) += phase * block;
    }
    return out;
}

double PeriodicBlockOperator::symmetry_defect() const {
    double worst = 0.0;
    for (const auto& [k, x] : coefficients_) {
        const BlockOperator* mirror = find(-k);
        for (const auto& [key, block] : x.entries()) {
            const Matrix* other = mirror ? mirror->find(key.second, key.first) : nullptr;
            const double d = other ? max_abs(*other - block.adjoint()) : max_abs(block);
            worst = std::max(worst, d);
        }
    }
    return worst;
}

PeriodicBlockOperator& PeriodicBlockOperator::operator+=(const PeriodicBlockOperator& other) {
    if (!other.space().same_layout(*space_)) throw StructuralError("periodic operators live on different spaces");
    for (const auto& [k, x] : other.coefficients_) {
        auto it = coefficients_.find(k);
        if (it == coefficients_.end())
            coefficients_.emplace(k, x);
        else
            it->second += x;
    }
    return *this;
}

PeriodicBlockOperator& PeriodicBlockOperator::operator-=(const PeriodicBlockOperator& other) {
    PeriodicBlockOperator neg = other;
    neg *= -1.0;
    return *this += neg;
}

PeriodicBlockOperator& PeriodicBlockOperator::operator*=(Complex s) {
    for (auto& [k, x] : coefficients_) x *= s;
    return *this;
}

PeriodicBlockOperator multiply(const PeriodicBlockOperator& x, const PeriodicBlockOperator& y,
                               std::optional<int> max_frequency, double* dropped) {
    if (!x.space().same_layout(y.space())) throw StructuralError("periodic operators live on different spaces");
    PeriodicBlockOperator out(x.space_ptr());
    double lost = 0.0;
    std::map<int, BlockOperator> acc;
    for (const auto& [a, xa] : x.coefficients()) {
        for (const auto& [b, yb] : y.coefficients()) {
            const int k = a + b;
            if (max_frequency && std::abs(k) > *max_frequency) {
                if (dropped) {
                    const BlockOperator z = compose(xa, yb);
                    for (const auto& [key, block] : z.entries()) lost += spectral_norm(block);
                }
                continue;
            }
            auto it = acc.find(k);
            if (it == acc.end())
                acc.emplace(k, compose(xa, yb));
            else
                it->second += compose(xa, yb);
        }
    }
    for (auto& [k, z] : acc) out.set(k, std::move(z));
    if (dropped) *dropped = lost;
    return out;
}

PeriodicBlockOperator adjoint(const PeriodicBlockOperator& x) {
    PeriodicBlockOperator out(x.space_ptr());
    for (const auto& [k, xk] : x.coefficients()) out.set(-k, adjoint(xk));
    return out;
}

PeriodicBlockOperator derivative(const PeriodicBlockOperator& x) {
    PeriodicBlockOperator out(x.space_ptr());
    for (const auto& [k, xk] : x.coefficients())
        if (k != 0) out.set(k, Complex(0.0, k) * xk);
    return out;
}

PeriodicBlockOperator truncate(const PeriodicBlockOperator& x, int max_frequency) {
    PeriodicBlockOperator out(x.space_ptr());
    for (const auto& [k, xk] : x.coefficients())
        if (std::abs(k) <= max_frequency) out.set(k, xk);
    return out;
}

// ------------------------------------------------------------------ norms

double WeightSequence::operator()(int k) const { return std::pow(2.0, r) * frequency_weight(k, r); }

double norm_r(const PeriodicBlockOperator& v, double r) {
    return row_sup(v, [r](int k, int, int) { return frequency_weight(k, r); });
}

double norm_r1r2(const PeriodicBlockOperator& v, double r1, double r2) {
    return row_sup(v, [r1, r2](int k, int m, int n) {
        const double dk = k;
        const double dmn = m - n;
        return std::pow(1.0 + dk * dk, 0.5 * r1) * std::pow(1.0 + dmn * dmn, 0.5 * r2);
    });
}

double triple_norm_r(const PeriodicBlockOperator& v, double r) {
    return pair_sup(v, [r](int k) { return frequency_weight(k, r); });
}

double weighted_norm(const PeriodicBlockOperator& v, const WeightSequence& w) {
    return row_sup(v, [&w](int k, int, int) { return w(k); });
}

double weighted_triple_norm(const PeriodicBlockOperator& v, const WeightSequence& w) {
    return pair_sup(v, [&w](int k) { return w(k); });
}

OmegaNormResult norm_r_omega(const FrequencyFamily& family, double r, double omega0, const std::vector<double>& grid) {
    if (grid.size() < 2) throw UsageError("norm_r_omega needs at least two grid frequencies");
    std::vector<PeriodicBlockOperator> values;
    values.reserve(grid.size());
    for (double w : grid) values.push_back(family(w));
    OmegaNormResult best;
    best.value = -1.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        for (std::size_t j = 0; j < grid.size(); ++j) {
            if (i == j || grid[i] == grid[j]) continue;
            PeriodicBlockOperator diff = values[i] - values[j];
            diff *= 1.0 / (grid[i] - grid[j]);
            const GradedSpace& space = values[i].space();
            std::vector<double> rows(space.block_count(), 0.0);
            for (const auto& [k, x] : values[i].coefficients())
                for (const auto& [key, block] : x.entries())
                    rows[key.first] += frequency_weight(k, r) * spectral_norm(block);
            for (const auto& [k, x] : diff.coefficients())
                for (const auto& [key, block] : x.entries())
                    rows[key.first] += omega0 * frequency_weight(k, r) * spectral_norm(block);
            const double s = *std::max_element(rows.begin(), rows.end());
            if (s > best.value) best = {s, grid[i], grid[j]};
        }
    }
    if (best.value < 0.0) throw UsageError("norm_r_omega needs two distinct grid frequencies");
    return best;
}

// --------------------------------------------------------------- Fourier

FourierResult fourier_blocks(const BlockSampler& sampler, int k_max, int grid_size) {
    if (k_max < 0) throw UsageError("k_max must be nonnegative");
    if (grid_size < 4 * k_max || grid_size < 1) throw UsageError("grid_size must be at least 4 k_max");
    std::vector<BlockOperator> samples;
    samples.reserve(grid_size);
    double scale = 0.0;
    for (int j = 0; j < grid_size; ++j) {
        samples.push_back(sampler(kTwoPi * j / grid_size));
        for (const auto& [key, block] : samples.back().entries()) scale = std::max(scale, max_abs(block));
    }
    SpacePtr space = samples.front().space_ptr();
    for (const auto& s : samples)
        if (!s.space().same_layout(*space)) throw StructuralError("sampler changed the graded space");

    std::map<int, BlockOperator> raw;
    for (int k = -k_max; k <= k_max; ++k) {
        BlockOperator acc(space);
        for (int j = 0; j < grid_size; ++j) {
            const Complex phase = std::polar(1.0 / grid_size, -kTwoPi * k * j / grid_size);
            for (const auto& [key, block] : samples[j].entries()) acc.add(key.first, key.second, phase * block);
        }
        raw.emplace(k, std::move(acc));
    }

    FourierResult out{PeriodicBlockOperator(space), 0.0, 0.0, false};
    const double prune = 16.0 * kEps * scale;
    std::vector<double> mass(2 * k_max + 1, 0.0);
    for (auto& [k, x] : raw) {
        const BlockOperator& mirror = raw.at(-k);
        BlockOperator sym(space);
        for (const auto& [key, block] : x.entries()) {
            const Matrix* other = mirror.find(key.second, key.first);
            Matrix avg = other ? Matrix(0.5 * (block + other->adjoint())) : Matrix(0.5 * block);
            out.symmetry_defect = std::max(out.symmetry_defect, max_abs(avg - block));
            if (max_abs(avg) > prune) sym.set(key.first, key.second, std::move(avg));
        }
        for (const auto& [key, block] : mirror.entries()) {
            if (x.find(key.second, key.first)) continue;
            Matrix avg = 0.5 * block.adjoint();
            out.symmetry_defect = std::max(out.symmetry_defect, max_abs(avg));
            if (max_abs(avg) > prune) sym.set(key.second, key.first, std::move(avg));
        }
        mass[k + k_max] = norm_inf1(sym);
        out.v.set(k, std::move(sym));
    }
    const double largest = *std::max_element(mass.begin(), mass.end());
    if (k_max > 0 && largest > 0.0) {
        out.top_ratio = std::max(mass.front(), mass.back()) / largest;
        out.aliasing_warning = out.top_ratio > 1e-3;
    }
    return out;
}

// --------------------------------------------------------------- assembly

long floquet_index(const GradedSpace& space, int k_max, int k, int n, int i) {
    return static_cast<long>(k + k_max) * space.total_dim() + space.offset(n) + i;
}

Matrix assemble_floquet(const GradedSpace& space, const PeriodicBlockOperator& v, double omega, int k_max,
                        const FloquetAssemblyOptions& options) {
    if (k_max < 0) throw UsageError("k_max must be nonnegative");
    if (!v.space().same_layout(space)) throw StructuralError("perturbation lives on a different space");
    if (v.max_frequency() > 2 * k_max) {
        std::ostringstream msg;
        msg << "perturbation has harmonics up to " << v.max_frequency() << ", beyond reach of K_max = " << k_max;
        throw TruncationError(msg.str());
    }
    const long d = space.total_dim();
    const long dim = (2L * k_max + 1) * d;
    if (dim > options.dimension_cap) {
        std::ostringstream msg;
        msg << "Floquet assembly of dimension " << dim << " exceeds the cap " << options.dimension_cap;
        throw MemoryGuardError(msg.str());
    }
    Matrix k_op = Matrix::Zero(dim, dim);
    const Matrix h0 = space.dense_h0();
    for (int k = -k_max; k <= k_max; ++k) {
        const long o = (k + k_max) * d;
        k_op.block(o, o, d, d) = h0;
        k_op.block(o, o, d, d).diagonal().array() += omega * k;
    }
    for (const auto& [q, vq] : v.coefficients()) {
        const Matrix dense = vq.to_dense();
        for (int k = -k_max; k <= k_max; ++k) {
            const int kp = k - q;
            if (kp < -k_max || kp > k_max) continue;
            k_op.block((k + k_max) * d, (kp + k_max) * d, d, d) += dense;
        }
    }
    return k_op;
}

// ---------------------------------------------------------- Floquet step

FloquetStepResult floquet_commutator_step(const GradedSpace& space, const BlockOperator& g_diag,
                                          const PeriodicBlockOperator& v, double omega,
                                          const SylvesterOptions& options) {
    if (!g_diag.is_diagonal()) throw PreconditionError("G must be block diagonal");
    if (!g_diag.space().same_layout(space) || !v.space().same_layout(space))
        throw StructuralError("operators live on different spaces");
    const int nb = space.block_count();
    std::vector<Matrix> h(nb);
    std::vector<HermitianEigen> eig(nb);
    for (int n = 0; n < nb; ++n) {
        const Matrix* g = g_diag.find(n, n);
        h[n] = g ? Matrix(space.energy(n) + *g) : space.energy(n);
        eig[n] = hermitian_eigen(h[n]);
    }

    std::vector<ResonantTriple> resonant;
    for (const auto& [k, vk] : v.coefficients()) {
        for (const auto& [key, block] : vk.entries()) {
            const auto [m, n] = key;
            if (k == 0 && m == n) continue;
            const double d = sorted_distance((eig[m].values.array() + omega * k).matrix(), eig[n].values);
            if (!(d >= options.distance_floor)) resonant.push_back({k, m, n, d});
        }
    }
    if (!resonant.empty()) {
        std::ostringstream msg;
        msg << resonant.size() << " small divisor(s) below " << options.distance_floor << ":";
        for (std::size_t i = 0; i < std::min<std::size_t>(resonant.size(), 8); ++i)
            msg << " (k=" << resonant[i].k << ",m=" << resonant[i].m << ",n=" << resonant[i].n
                << ",d=" << resonant[i].distance << ")";
        throw ResonanceError(msg.str(), std::move(resonant));
    }

    FloquetStepResult out{PeriodicBlockOperator(v.space_ptr()), {}};
    for (const auto& [k, vk] : v.coefficients()) {
        for (const auto& [key, block] : vk.entries()) {
            const auto [m, n] = key;
            if (k == 0 && m == n) continue;
            Matrix a = h[m];
            a.diagonal().array() += omega * k;
            HermitianEigen ea{(eig[m].values.array() + omega * k).matrix(), eig[m].vectors};
            try {
                SylvesterSolution s = solve_sylvester(a, ea, h[n], eig[n], block, options);
                out.certificates.push_back({k, m, n, s.certificate});
                out.w.add(k, m, n, s.x);
            } catch (const NumericalFailure& e) {
                std::ostringstream msg;
                msg << "triple (k=" << k << ",m=" << m << ",n=" << n << "): " << e.what();
                throw NumericalFailure(msg.str());
            }
        }
    }
    return out;
}

// ------------------------------------------------- time-dependent iteration

namespace {

struct GridSamples {
    std::vector<Matrix> j;
    std::vector<Matrix> g;
    int max_iterations = 0;
};

struct DenseFamily {
    std::map<int, Matrix> coefficients;  // |k| < T/2
};

/// Coefficients X_k = (1/T) sum_j X(t_j) e^{-ikt_j}, |k| < T/2.
DenseFamily dft(const std::vector<Matrix>& samples) {
    const int t = static_cast<int>(samples.size());
    const Eigen::Index rows = samples.front().rows();
    const Eigen::Index cols = samples.front().cols();
    DenseFamily out;
    for (int k = -(t / 2 - 1); k <= t / 2 - 1; ++k) out.coefficients.emplace(k, Matrix::Zero(rows, cols));
    Eigen::FFT<double> fft;
    std::vector<Complex> in(t), spec;
    for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (int j = 0; j < t; ++j) in[j] = samples[j](r, c);
            fft.fwd(spec, in);
            for (auto& [k, m] : out.coefficients) m(r, c) = spec[(k + t) % t] / static_cast<double>(t);
        }
    }
    return out;
}

double family_difference(const DenseFamily& coarse, const DenseFamily& fine) {
    double diff = 0.0;
    for (const auto& [k, m] : fine.coefficients) {
        auto it = coarse.coefficients.find(k);
        diff += it == coarse.coefficients.end() ? m.norm() : (m - it->second).norm();
    }
    return diff;
}

PeriodicBlockOperator to_periodic(const SpacePtr& space, const DenseFamily& f, int k_out, double prune) {
    PeriodicBlockOperator out(space);
    for (const auto& [k, m] : f.coefficients) {
        if (std::abs(k) > k_out || max_abs(m) <= prune) continue;
        BlockOperator x = BlockOperator::from_dense(space, m);
        BlockOperator kept(space);
        for (const auto& [key, block] : x.entries())
            if (max_abs(block) > prune) kept.set(key.first, key.second, block);
        out.set(k, std::move(kept));
    }
    return out;
}

double coefficient_sum_norm(const PeriodicBlockOperator& x) {
    double s = 0.0;
    for (const auto& [k, xk] : x.coefficients()) s += norm_22(xk);
    return s;
}

}  // namespace

RegularizedPerturbation time_dependent_pdm(SpacePtr space, const PeriodicBlockOperator& v, double omega, double r,
                                           const TimeDependentOptions& options) {
    if (!(omega > 0.0)) throw UsageError("omega must be positive");
    if (!(r >= 1.0)) throw DomainError("time_dependent_pdm needs r >= 1");
    if (!v.space().same_layout(*space)) throw StructuralError("perturbation lives on a different space");
    const double sym = v.symmetry_defect();
    if (sym > 1e-12) {
        std::ostringstream msg;
        msg << "V(t) is not Hermitian-valued (defect " << sym << ")";
        throw PreconditionError(msg.str());
    }

    const PdmProblem problem = PdmProblem::from_space(space);
    RegularizedPerturbation out{PeriodicBlockOperator(space), PeriodicBlockOperator(space),
                                PeriodicBlockOperator(space), PeriodicBlockOperator(space)};
    out.omega = omega;
    out.omega0 = options.omega0.value_or(8.0 * omega / 9.0);
    out.r = r;
    out.delta_e = problem.delta_e();
    out.reconstruction_tol = options.reconstruction_tol;
    const WeightSequence wr{r};
    const WeightSequence wr1{r - 1.0};
    out.weighted_v = weighted_triple_norm(v, wr);
    out.triple_v = triple_norm_r(v, r);
    out.x1 = std::numbers::pi * out.weighted_v / out.delta_e;
    if (!options.pdm.unsafe && !within_threshold(out.weighted_v, out.delta_e / 8.0)) {
        std::ostringstream msg;
        msg << "|||w_r V|||_0 = " << out.weighted_v << " exceeds Delta E / 8 = " << out.delta_e / 8.0;
        throw ThresholdRefusal(msg.str(), "|||w_r V|||_0 <= Delta E / 8", out.weighted_v, out.delta_e / 8.0);
    }
    PdmOptions pointwise = options.pdm;
    pointwise.unsafe = true;  // the weighted condition above dominates the pointwise one

    if (v.max_frequency() == 0) {
        const PdmResult res = pdm_run(problem, v.coefficient(0), pointwise);
        out.j = PeriodicBlockOperator::constant(res.j);
        out.g = PeriodicBlockOperator::constant(res.g);
        out.grid_size = 1;
        out.max_iterations = res.certificate.iterations;
    } else {
        GridSamples samples;
        auto sample = [&](double t) {
            const PdmResult res = pdm_run(problem, v.at(t), pointwise);
            samples.max_iterations = std::max(samples.max_iterations, res.certificate.iterations);
            return std::pair{res.j.to_dense(), res.g.to_dense()};
        };
        int t = options.initial_grid;
        while (t < 4 * (v.max_frequency() + 1)) t *= 2;
        for (int j = 0; j < t; ++j) {
            auto [jj, gg] = sample(kTwoPi * j / t);
            samples.j.push_back(std::move(jj));
            samples.g.push_back(std::move(gg));
        }
        DenseFamily fj = dft(samples.j);
        DenseFamily fg = dft(samples.g);
        for (;;) {
            if (2 * t > options.max_grid) {
                std::ostringstream msg;
                msg << "time grid of " << t << " points cannot resolve J and G to " << options.coefficient_tol
                    << " (last change " << out.grid_difference << ")";
                throw TruncationError(msg.str());
            }
            std::vector<Matrix> j2(2 * t), g2(2 * t);
            for (int j = 0; j < t; ++j) {
                j2[2 * j] = samples.j[j];
                g2[2 * j] = samples.g[j];
                auto [jj, gg] = sample(kTwoPi * (2 * j + 1) / (2 * t));
                j2[2 * j + 1] = std::move(jj);
                g2[2 * j + 1] = std::move(gg);
            }
            DenseFamily fj2 = dft(j2);
            DenseFamily fg2 = dft(g2);
            out.grid_difference = family_difference(fj, fj2) + family_difference(fg, fg2);
            samples.j = std::move(j2);
            samples.g = std::move(g2);
            fj = std::move(fj2);
            fg = std::move(fg2);
            t *= 2;
            if (out.grid_difference <= options.coefficient_tol) break;
        }
        out.grid_size = t;
        out.max_iterations = samples.max_iterations;

        // Smallest support whose discarded tail stays below the tolerance.
        int k_out = t / 2 - 1;
        double tail = 0.0;
        while (k_out > 0) {
            const double next = fj.coefficients.at(k_out).norm() + fj.coefficients.at(-k_out).norm() +
                                fg.coefficients.at(k_out).norm() + fg.coefficients.at(-k_out).norm();
            if (tail + next > options.coefficient_tol) break;
            tail += next;
            --k_out;
        }
        out.dropped_tail = tail;
        double scale = 0.0;
        for (const auto& s : samples.j) scale = std::max(scale, max_abs(s));
        for (const auto& s : samples.g) scale = std::max(scale, max_abs(s));
        const double prune = 16.0 * kEps * scale;
        out.j = to_periodic(space, fj, k_out, prune);
        out.g = to_periodic(space, fg, k_out, prune);
    }

    out.jdot = derivative(out.j);
    const PeriodicBlockOperator j_star = adjoint(out.j);
    out.v_tilde = out.g - Complex(0.0, omega) * multiply(j_star, out.jdot);

    const PeriodicBlockOperator h0 = PeriodicBlockOperator::constant(BlockOperator::energy(space));
    const PeriodicBlockOperator rec = multiply(multiply(out.j, h0 + out.g), j_star) - (h0 + v);
    out.reconstruction_residual = coefficient_sum_norm(rec);
    PeriodicBlockOperator unit = multiply(out.j, j_star);
    unit -= PeriodicBlockOperator::constant(BlockOperator::identity(space));
    out.unitarity_residual = coefficient_sum_norm(unit);
    out.v_tilde_symmetry_defect = out.v_tilde.symmetry_defect();

    out.jdot_norm = weighted_norm(out.jdot, wr1);
    out.jdot_bound = 3.0 * std::numbers::pi * out.weighted_v / out.delta_e;
    out.v_tilde_norm = weighted_norm(out.v_tilde, wr1);
    out.v_tilde_bound = (1.0 + 8.0 * out.omega0 / out.delta_e) * std::pow(2.0, r) * out.triple_v;
    out.j_weighted = weighted_norm(out.j, wr);
    out.g_weighted = weighted_norm(out.g, wr);
    return out;
}

// ------------------------------------------------------ spectra, projections

QuasiEnergyComparison compare_quasi_energies(const GradedSpace& space, const PeriodicBlockOperator& a,
                                             const PeriodicBlockOperator& b, double omega, int k_max,
                                             double edge_weight) {
    const Matrix ka = assemble_floquet(space, a, omega, k_max);
    const Matrix kb = assemble_floquet(space, b, omega, k_max);
    Eigen::SelfAdjointEigenSolver<Matrix> ea(0.5 * (ka + ka.adjoint()));
    Eigen::SelfAdjointEigenSolver<Matrix> eb(0.5 * (kb + kb.adjoint()), Eigen::EigenvaluesOnly);
    const RealVector& lb = eb.eigenvalues();
    const long d = space.total_dim();
    const int inner = k_max / 2;
    QuasiEnergyComparison out;
    for (Eigen::Index i = 0; i < ea.eigenvalues().size(); ++i) {
        const auto col = ea.eigenvectors().col(i);
        double outside = 0.0;
        for (int k = -k_max; k <= k_max; ++k)
            if (std::abs(k) > inner) outside += col.segment((k + k_max) * d, d).squaredNorm();
        if (outside > edge_weight) continue;
        const double lambda = ea.eigenvalues()(i);
        const double* p = std::lower_bound(lb.data(), lb.data() + lb.size(), lambda);
        double best = std::numeric_limits<double>::infinity();
        if (p != lb.data() + lb.size()) best = std::min(best, *p - lambda);
        if (p != lb.data()) best = std::min(best, lambda - *(p - 1));
        out.max_deviation = std::max(out.max_deviation, best);
        ++out.compared;
    }
    return out;
}

PeriodicBlockOperator eigenprojection_family(const SpacePtr& space, const Vector& phi, int k_max) {
    const long d = space->total_dim();
    if (phi.size() != (2L * k_max + 1) * d) throw StructuralError("eigenvector does not match the assembly");
    PeriodicBlockOperator out(space);
    for (int k = -2 * k_max; k <= 2 * k_max; ++k) {
        Matrix p = Matrix::Zero(d, d);
        for (int l = -k_max; l <= k_max; ++l) {
            const int a = k + l;
            if (a < -k_max || a > k_max) continue;
            p += phi.segment((a + k_max) * d, d) * phi.segment((l + k_max) * d, d).adjoint();
        }
        if (max_abs(p) > 0.0) out.set(k, BlockOperator::from_dense(space, p));
    }
    return out;
}

// ------------------------------------------------------------ propagator

PropagatorState simulate_propagator(const GradedSpace& space, const PeriodicBlockOperator& v, double omega,
                                    const Vector& psi0, double horizon, const PropagatorOptions& options) {
    if (!v.space().same_layout(space)) throw StructuralError("perturbation lives on a different space");
    if (psi0.size() != space.total_dim()) throw StructuralError("initial state has the wrong dimension");
    if (std::abs(psi0.norm() - 1.0) > 1e-12) throw PreconditionError("initial state must be normalized");
    if (!(omega > 0.0) || !(horizon >= 0.0)) throw UsageError("omega must be positive and horizon nonnegative");

    const double default_dt = kTwoPi / (64.0 * std::max(v.max_frequency(), 1) * omega);
    const double dt_req = options.dt.value_or(default_dt);
    if (!(dt_req > 0.0)) throw UsageError("time step must be positive");
    const long steps = static_cast<long>(std::ceil(horizon / dt_req - 1e-9));

    PropagatorState st;
    st.steps = steps;
    st.dt = steps > 0 ? horizon / steps : dt_req;
    const int nb = space.block_count();
    const Matrix h0 = space.dense_h0();

    auto tails = [&](const Vector& psi) {
        std::vector<double> out(nb, 0.0);
        double acc = 0.0;
        for (int n = nb - 1; n >= 0; --n) {
            acc += psi.segment(space.offset(n), space.dim(n)).squaredNorm();
            out[n] = std::sqrt(acc);
        }
        return out;
    };
    auto record = [&](double t, const Vector& psi) {
        st.times.push_back(t);
        st.energy.push_back((psi.adjoint() * h0 * psi)(0, 0).real());
        st.norm.push_back(psi.norm());
    };

    Vector psi = psi0;
    st.tail_initial = tails(psi);
    st.tail_sup = st.tail_initial;
    record(0.0, psi);
    for (long s = 0; s < steps; ++s) {
        const double t_mid = (s + 0.5) * st.dt;
        Matrix h = h0 + v.dense_at(omega * t_mid);
        h = (0.5 * (h + h.adjoint())).eval();
        Eigen::SelfAdjointEigenSolver<Matrix> es(h);
        const Matrix& q = es.eigenvectors();
        Vector c = q.adjoint() * psi;
        for (Eigen::Index i = 0; i < c.size(); ++i) c(i) *= std::polar(1.0, -es.eigenvalues()(i) * st.dt);
        psi = q * c;

        const double drift = std::abs(psi.norm() - 1.0);
        st.max_norm_drift = std::max(st.max_norm_drift, drift);
        if (drift > options.norm_tol) {
            std::ostringstream msg;
            msg << "norm drift " << drift << " at t = " << (s + 1) * st.dt << " exceeds " << options.norm_tol;
            throw IntegratorError(msg.str());
        }
        const std::vector<double> tl = tails(psi);
        for (int n = 0; n < nb; ++n) st.tail_sup[n] = std::max(st.tail_sup[n], tl[n]);
        if ((s + 1) % std::max(options.record_every, 1) == 0 || s + 1 == steps) record((s + 1) * st.dt, psi);
    }
    st.psi = psi;
    return st;
}

}  // namespace pdm
