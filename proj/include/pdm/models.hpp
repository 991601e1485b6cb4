#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "pdm/floquet.hpp"
#include "pdm/gaps.hpp"

namespace pdm {

enum class ModelKind { quantum_top, delta_rotor, custom };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

/// Everything a model file can say. For the rotor and the top the spectrum comes
/// from (kind, d, N); V(t) = g f(t) W + explicit couplings, f(t) = sum_k fhat_k e^{ikt}.
struct ModelSpec {
    ModelKind kind = ModelKind::delta_rotor;
    int truncation = 2;  ///< N
    int k_max = 0;
    int d = 1;
    double g = 0.0;
    double omega = 1.0;
    /// Empty means f = 1.
    std::map<int, Complex> fhat;

    /// Regularity exponents, carried as metadata.
    std::optional<double> s, u, r, sigma;

    /// Custom spectrum, block n -> E_n.
    std::vector<Matrix> energies;
    /// Spatial part W(m,n) (top and custom; the rotor uses the delta interaction).
    std::map<std::pair<int, int>, Matrix> w;
    /// Explicit Fourier blocks V(k,m,n) added on top of g f W.
    std::map<std::tuple<int, int, int>, Matrix> couplings;
    /// Declared growth beyond the truncation (custom models).
    std::optional<TailModel> tail;
};

struct Model {
    ModelSpec spec;
    SpacePtr space;
    PeriodicBlockOperator v;
    std::optional<TailModel> tail;
};

/// -Laplace-Beltrami on S^d: E_n = n(n+d-1) with multiplicity C(n+d,d) - C(n+d-2,d), n < N.
SpacePtr quantum_top(int d, int truncation, long dimension_cap = 20000);
/// Block spectra of the top without dense blocks, for gap sums at large N.
std::vector<RealVector> quantum_top_spectra(int d, int truncation, long dimension_cap = 10000000);
/// Multiplicity M_n of the top as a double (exact for moderate n and d).
double top_multiplicity(int d, long n);
TailModel quantum_top_tail(int d);

/// Rotor on the circle: E_0 = 0 (M_0 = 1), E_n = n^2 with M_n = 2.
SpacePtr rotor_space(int truncation);
TailModel delta_rotor_tail();
/// P_m delta P_n = (1/2pi) * ones(M_m, M_n) for all retained m, n.
BlockOperator delta_operator(const SpacePtr& rotor);

/// Space and V_k = g fhat_k delta (fhat empty means static V = g delta).
Model delta_rotor(int truncation, double g, const std::map<int, Complex>& fhat = {});

/// Builds and validates any model spec; throws IngestError on inconsistent input.
Model build_model(const ModelSpec& spec);

/// Explicit custom spec reproducing a space and perturbation bit for bit.
ModelSpec to_custom_spec(const GradedSpace& space, const PeriodicBlockOperator& v,
                         const std::optional<TailModel>& tail = std::nullopt);

/// Handler for keys the model grammar does not know; returns false to reject the line.
using ExtraKeyHandler = std::function<bool(const std::string& key, const std::vector<std::string>& args, int line)>;

/// Parses the line-based model format; see README for the grammar.
ModelSpec read_model(std::istream& in, const ExtraKeyHandler& extra = {});
ModelSpec read_model_file(const std::string& path, const ExtraKeyHandler& extra = {});
void write_model(std::ostream& out, const ModelSpec& spec);

/// Convergence check of sum_{m != n} M_m M_n / |E_m - E_n|^sigma for the d-dimensional top.
struct SigmaVerdict {
    int d = 1;
    double sigma = 0.0;
    int n_probe = 0;
    bool analytic_converges = false;  ///< sigma > 2d - 1
    /// Partial sums over m, n < N, 2N, 4N, 8N.
    std::array<double, 4> partial_sums{};
    /// Ratios of successive increments; near 1 for a divergent sum, 2^{-p} for a tail ~ N^{-p}.
    double ratio = 0.0;
    double ratio_next = 0.0;
    bool empirical_divergent = false;
    /// Certified enclosure from the gap report at N and 2N.
    Bracket certified;
    Bracket certified_doubled;
    bool certified_divergent = false;
    /// Certified brackets finite, overlapping, and above the largest partial sum.
    bool tail_stable = false;

    bool consistent() const;
};

SigmaVerdict sigma_condition_top(int d, double sigma, int n_probe);

}  // namespace pdm
