#include "pdm/models.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "pdm/errors.hpp"

namespace pdm {

namespace {

constexpr double kInvTwoPi = 0.5 / std::numbers::pi;

std::string key_string(int k, int m, int n) {
    return "(" + std::to_string(k) + "," + std::to_string(m) + "," + std::to_string(n) + ")";
}

/// Polynomial coefficients, index = power.
std::vector<double> poly_mul(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
}

PowerLaw from_poly(const std::vector<double>& c) {
    std::vector<PowerLaw::Term> terms;
    for (std::size_t p = 0; p < c.size(); ++p)
        if (c[p] != 0.0) terms.push_back({c[p], static_cast<double>(p)});
    return PowerLaw(std::move(terms));
}

void check_fhat(const std::map<int, Complex>& fhat) {
    for (const auto& [k, c] : fhat) {
        auto it = fhat.find(-k);
        const Complex mirror = it == fhat.end() ? Complex(0.0) : it->second;
        if (std::abs(mirror - std::conj(c)) > 1e-12 * std::max(1.0, std::abs(c)))
            throw IngestError("driving coefficients must satisfy fhat_{-k} = conj(fhat_k); fails at k = " +
                                  std::to_string(k),
                              0);
    }
}

}  // namespace

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::quantum_top: return "quantum_top";
        case ModelKind::delta_rotor: return "delta_rotor";
        case ModelKind::custom: return "custom";
    }
    return "custom";
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "quantum_top") return ModelKind::quantum_top;
    if (s == "delta_rotor") return ModelKind::delta_rotor;
    if (s == "custom") return ModelKind::custom;
    throw UsageError("unknown model kind '" + s + "'");
}

// ------------------------------------------------------------------ top

double top_multiplicity(int d, long n) {
    if (d < 1) throw DomainError("the top needs d >= 1");
    if (n < 0) return 0.0;
    if (n == 0) return 1.0;
    if (d == 1) return 2.0;
    // (2n+d-1) (n+1)...(n+d-2) / (d-1)!
    double m = 2.0 * n + d - 1;
    for (int j = 1; j <= d - 2; ++j) m *= static_cast<double>(n + j);
    for (int j = 2; j <= d - 1; ++j) m /= j;
    return std::round(m);
}

SpacePtr quantum_top(int d, int truncation, long dimension_cap) {
    if (d < 1) throw DomainError("the top needs d >= 1");
    if (truncation < 2) throw DomainError("truncation must be at least 2");
    std::vector<double> energies;
    std::vector<int> dims;
    double total = 0.0;
    for (int n = 0; n < truncation; ++n) {
        const double m = top_multiplicity(d, n);
        total += m;
        if (!(m < 1e9) || total > static_cast<double>(dimension_cap)) {
            std::ostringstream msg;
            msg << "quantum top d=" << d << ", N=" << truncation << " exceeds the dimension cap " << dimension_cap;
            throw DomainError(msg.str());
        }
        energies.push_back(static_cast<double>(n) * (n + d - 1));
        dims.push_back(static_cast<int>(m));
    }
    return make_space(GradedSpace::scalar(energies, dims));
}

std::vector<RealVector> quantum_top_spectra(int d, int truncation, long dimension_cap) {
    if (d < 1) throw DomainError("the top needs d >= 1");
    if (truncation < 2) throw DomainError("truncation must be at least 2");
    std::vector<RealVector> out;
    double total = 0.0;
    for (int n = 0; n < truncation; ++n) {
        const double m = top_multiplicity(d, n);
        total += m;
        if (total > static_cast<double>(dimension_cap)) throw DomainError("quantum top spectra exceed the dimension cap");
        out.push_back(RealVector::Constant(static_cast<Eigen::Index>(m), static_cast<double>(n) * (n + d - 1)));
    }
    return out;
}

TailModel quantum_top_tail(int d) {
    if (d < 1) throw DomainError("the top needs d >= 1");
    PowerLaw energy = d == 1 ? PowerLaw::monomial(1.0, 2.0) : PowerLaw({{1.0, 2.0}, {d - 1.0, 1.0}});
    if (d == 1) return {energy, PowerLaw::constant(2.0)};
    std::vector<double> poly{d - 1.0, 2.0};
    for (int j = 1; j <= d - 2; ++j) poly = poly_mul(poly, {static_cast<double>(j), 1.0});
    double fact = 1.0;
    for (int j = 2; j <= d - 1; ++j) fact *= j;
    for (double& c : poly) c /= fact;
    return {energy, from_poly(poly)};
}

// ---------------------------------------------------------------- rotor

SpacePtr rotor_space(int truncation) {
    if (truncation < 2) throw DomainError("truncation must be at least 2");
    std::vector<double> energies;
    std::vector<int> dims;
    for (int n = 0; n < truncation; ++n) {
        energies.push_back(static_cast<double>(n) * n);
        dims.push_back(n == 0 ? 1 : 2);
    }
    return make_space(GradedSpace::scalar(energies, dims));
}

TailModel delta_rotor_tail() { return {PowerLaw::monomial(1.0, 2.0), PowerLaw::constant(2.0)}; }

BlockOperator delta_operator(const SpacePtr& rotor) {
    BlockOperator out(rotor);
    const int nb = rotor->block_count();
    for (int m = 0; m < nb; ++m)
        for (int n = 0; n < nb; ++n)
            out.set(m, n, Matrix::Constant(rotor->dim(m), rotor->dim(n), Complex(kInvTwoPi, 0.0)));
    return out;
}

Model delta_rotor(int truncation, double g, const std::map<int, Complex>& fhat) {
    ModelSpec spec;
    spec.kind = ModelKind::delta_rotor;
    spec.truncation = truncation;
    spec.g = g;
    spec.fhat = fhat;
    return build_model(spec);
}

// ---------------------------------------------------------------- build

Model build_model(const ModelSpec& spec) {
    if (spec.truncation < 2 && spec.kind != ModelKind::custom) throw IngestError("N must be at least 2", 0);
    SpacePtr space;
    std::optional<TailModel> tail;
    switch (spec.kind) {
        case ModelKind::delta_rotor:
            space = rotor_space(spec.truncation);
            tail = delta_rotor_tail();
            break;
        case ModelKind::quantum_top:
            if (spec.d < 1) throw IngestError("d must be at least 1", 0);
            space = quantum_top(spec.d, spec.truncation);
            tail = quantum_top_tail(spec.d);
            break;
        case ModelKind::custom: {
            if (spec.energies.size() < 2) throw IngestError("a custom model needs at least two blocks", 0);
            if (spec.truncation != static_cast<int>(spec.energies.size()) && spec.truncation != 2)
                throw IngestError("N does not match the number of blocks", 0);
            try {
                space = make_space(spec.energies);
            } catch (const Error& e) {
                throw IngestError(e.what(), 0);
            }
            tail = spec.tail;
            break;
        }
    }
    if (spec.tail && spec.kind != ModelKind::custom) tail = spec.tail;

    BlockOperator w(space);
    if (spec.kind == ModelKind::delta_rotor) {
        if (!spec.w.empty()) throw IngestError("the delta rotor fixes W; remove the w blocks", 0);
        w = delta_operator(space);
    }
    const int nb = space->block_count();
    for (const auto& [key, block] : spec.w) {
        const auto [m, n] = key;
        if (m < 0 || n < 0 || m >= nb || n >= nb)
            throw IngestError("w block (" + std::to_string(m) + "," + std::to_string(n) + ") is outside the space", 0);
        try {
            w.set(m, n, block);
        } catch (const StructuralError& e) {
            throw IngestError(e.what(), 0);
        }
    }

    std::map<int, Complex> fhat = spec.fhat;
    if (fhat.empty()) fhat[0] = 1.0;
    check_fhat(fhat);

    PeriodicBlockOperator v(space);
    if (spec.g != 0.0 && !w.empty())
        for (const auto& [k, c] : fhat)
            if (c != Complex(0.0)) v.set(k, (spec.g * c) * w);
    for (const auto& [key, block] : spec.couplings) {
        const auto [k, m, n] = key;
        if (m < 0 || n < 0 || m >= nb || n >= nb)
            throw IngestError("coupling " + key_string(k, m, n) + " is outside the space", 0);
        try {
            v.add(k, m, n, block);
        } catch (const StructuralError& e) {
            throw IngestError("coupling " + key_string(k, m, n) + ": " + e.what(), 0);
        }
    }

    // Symmetry V(-k,n,m) = V(k,m,n)^*, reported at the first offending triple.
    for (const auto& [k, vk] : v.coefficients()) {
        const BlockOperator* mirror = v.find(-k);
        for (const auto& [key, block] : vk.entries()) {
            const Matrix* other = mirror ? mirror->find(key.second, key.first) : nullptr;
            const double d = other ? (*other - block.adjoint()).cwiseAbs().maxCoeff() : block.cwiseAbs().maxCoeff();
            if (d > 1e-12) {
                std::ostringstream msg;
                msg << "perturbation is not symmetric at " << key_string(k, key.first, key.second) << " (defect " << d
                    << ")";
                throw IngestError(msg.str(), 0);
            }
        }
    }
    ModelSpec resolved = spec;
    resolved.truncation = nb;
    resolved.k_max = std::max(spec.k_max, v.max_frequency());
    return Model{std::move(resolved), std::move(space), std::move(v), std::move(tail)};
}

ModelSpec to_custom_spec(const GradedSpace& space, const PeriodicBlockOperator& v, const std::optional<TailModel>& tail) {
    ModelSpec spec;
    spec.kind = ModelKind::custom;
    spec.truncation = space.block_count();
    spec.k_max = v.max_frequency();
    for (int n = 0; n < space.block_count(); ++n) spec.energies.push_back(space.energy(n));
    for (const auto& [k, vk] : v.coefficients())
        for (const auto& [key, block] : vk.entries()) spec.couplings[{k, key.first, key.second}] = block;
    spec.tail = tail;
    return spec;
}

// --------------------------------------------------------------- text io

namespace {

class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    /// Next nonblank line split into tokens; false at end of input.
    bool next(std::vector<std::string>& tokens) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            std::istringstream ss(line);
            tokens.clear();
            for (std::string t; ss >> t;) tokens.push_back(t);
            if (!tokens.empty()) return true;
        }
        return false;
    }
    int line() const { return line_; }

private:
    std::istream& in_;
    int line_ = 0;
};

double parse_double(const std::string& s, int line) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw IngestError("expected a number, got '" + s + "'", line);
    return v;
}

int parse_int(const std::string& s, int line) {
    char* end = nullptr;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0' || v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
        throw IngestError("expected an integer, got '" + s + "'", line);
    return static_cast<int>(v);
}

void expect_args(const std::vector<std::string>& t, std::size_t n, int line) {
    if (t.size() != n + 1)
        throw IngestError("'" + t[0] + "' takes " + std::to_string(n) + " argument(s), got " +
                              std::to_string(t.size() - 1),
                          line);
}

Matrix read_rows(LineReader& reader, int rows, int cols) {
    if (rows <= 0 || cols <= 0) throw IngestError("block dimensions must be positive", reader.line());
    Matrix m(rows, cols);
    std::vector<std::string> t;
    for (int i = 0; i < rows; ++i) {
        if (!reader.next(t)) throw IngestError("unexpected end of file inside a block", reader.line());
        if (static_cast<int>(t.size()) != 2 * cols)
            throw IngestError("block row needs " + std::to_string(2 * cols) + " numbers (re im pairs), got " +
                                  std::to_string(t.size()),
                              reader.line());
        for (int j = 0; j < cols; ++j)
            m(i, j) = Complex(parse_double(t[2 * j], reader.line()), parse_double(t[2 * j + 1], reader.line()));
    }
    return m;
}

PowerLaw parse_law(const std::vector<std::string>& t, int line) {
    if (t.size() < 3 || (t.size() - 1) % 2 != 0)
        throw IngestError("'" + t[0] + "' takes coefficient/exponent pairs", line);
    std::vector<PowerLaw::Term> terms;
    for (std::size_t i = 1; i + 1 < t.size(); i += 2) terms.push_back({parse_double(t[i], line), parse_double(t[i + 1], line)});
    try {
        return PowerLaw(std::move(terms));
    } catch (const Error& e) {
        throw IngestError(e.what(), line);
    }
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_rows(std::ostream& out, const Matrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            out << (j ? " " : "") << fmt(m(i, j).real()) << ' ' << fmt(m(i, j).imag());
        out << '\n';
    }
}

void write_law(std::ostream& out, const char* key, const PowerLaw& law) {
    out << key;
    for (const auto& term : law.terms()) out << ' ' << fmt(term.coefficient) << ' ' << fmt(term.exponent);
    out << '\n';
}

}  // namespace

ModelSpec read_model(std::istream& in, const ExtraKeyHandler& extra) {
    ModelSpec spec;
    LineReader reader(in);
    std::vector<std::string> t;
    std::map<int, Matrix> blocks;
    std::optional<PowerLaw> tail_energy, tail_mult;
    std::map<std::tuple<int, int, int>, int> coupling_lines;
    bool saw_n = false;
    while (reader.next(t)) {
        const int line = reader.line();
        const std::string& key = t[0];
        if (key == "kind") {
            expect_args(t, 1, line);
            try {
                spec.kind = model_kind_from_string(t[1]);
            } catch (const UsageError& e) {
                throw IngestError(e.what(), line);
            }
        } else if (key == "N" || key == "truncation") {
            expect_args(t, 1, line);
            spec.truncation = parse_int(t[1], line);
            saw_n = true;
        } else if (key == "K_max") {
            expect_args(t, 1, line);
            spec.k_max = parse_int(t[1], line);
        } else if (key == "d") {
            expect_args(t, 1, line);
            spec.d = parse_int(t[1], line);
        } else if (key == "g") {
            expect_args(t, 1, line);
            spec.g = parse_double(t[1], line);
        } else if (key == "omega") {
            expect_args(t, 1, line);
            spec.omega = parse_double(t[1], line);
            if (!(spec.omega > 0.0)) throw IngestError("omega must be positive", line);
        } else if (key == "s" || key == "u" || key == "r" || key == "sigma") {
            expect_args(t, 1, line);
            const double v = parse_double(t[1], line);
            (key == "s" ? spec.s : key == "u" ? spec.u : key == "r" ? spec.r : spec.sigma) = v;
        } else if (key == "fourier") {
            expect_args(t, 3, line);
            spec.fhat[parse_int(t[1], line)] = Complex(parse_double(t[2], line), parse_double(t[3], line));
        } else if (key == "block") {
            expect_args(t, 2, line);
            const int n = parse_int(t[1], line);
            const int m = parse_int(t[2], line);
            if (blocks.count(n)) throw IngestError("block " + std::to_string(n) + " given twice", line);
            Matrix e = read_rows(reader, m, m);
            const double defect = (e - e.adjoint()).cwiseAbs().maxCoeff();
            if (defect > 1e-12)
                throw IngestError("energy block " + std::to_string(n) + " is not Hermitian", line);
            blocks[n] = std::move(e);
        } else if (key == "w") {
            expect_args(t, 4, line);
            const int m = parse_int(t[1], line), n = parse_int(t[2], line);
            spec.w[{m, n}] = read_rows(reader, parse_int(t[3], line), parse_int(t[4], line));
        } else if (key == "coupling") {
            expect_args(t, 5, line);
            const int k = parse_int(t[1], line), m = parse_int(t[2], line), n = parse_int(t[3], line);
            if (spec.couplings.count({k, m, n}))
                throw IngestError("coupling " + key_string(k, m, n) + " given twice", line);
            spec.couplings[{k, m, n}] = read_rows(reader, parse_int(t[4], line), parse_int(t[5], line));
            coupling_lines[{k, m, n}] = line;
        } else if (key == "tail_energy") {
            tail_energy = parse_law(t, line);
        } else if (key == "tail_multiplicity") {
            tail_mult = parse_law(t, line);
        } else if (!extra || !extra(key, std::vector<std::string>(t.begin() + 1, t.end()), line)) {
            throw IngestError("unknown key '" + key + "'", line);
        }
    }

    if (!blocks.empty()) {
        if (spec.kind != ModelKind::custom) throw IngestError("energy blocks are only allowed for kind custom", 0);
        int expect = 0;
        for (auto& [n, e] : blocks) {
            if (n != expect) throw IngestError("energy blocks must be numbered 0..N-1; missing " + std::to_string(expect), 0);
            spec.energies.push_back(std::move(e));
            ++expect;
        }
        if (saw_n && spec.truncation != static_cast<int>(spec.energies.size()))
            throw IngestError("N = " + std::to_string(spec.truncation) + " but " +
                                  std::to_string(spec.energies.size()) + " blocks were given",
                              0);
        spec.truncation = static_cast<int>(spec.energies.size());
    }
    if (tail_energy || tail_mult) {
        if (!tail_energy || !tail_mult) throw IngestError("tail_energy and tail_multiplicity go together", 0);
        spec.tail = TailModel{*tail_energy, *tail_mult};
    }

    // Validate now so errors carry line numbers.
    try {
        build_model(spec);
    } catch (const IngestError& e) {
        const std::string what = e.what();
        for (const auto& [key, line] : coupling_lines) {
            const std::string tag = key_string(std::get<0>(key), std::get<1>(key), std::get<2>(key));
            if (what.find(tag) != std::string::npos) throw IngestError(what, line);
        }
        throw;
    }
    return spec;
}

ModelSpec read_model_file(const std::string& path, const ExtraKeyHandler& extra) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open '" + path + "'", 0);
    return read_model(in, extra);
}

void write_model(std::ostream& out, const ModelSpec& spec) {
    out << "kind " << to_string(spec.kind) << '\n';
    out << "N " << spec.truncation << '\n';
    out << "K_max " << spec.k_max << '\n';
    if (spec.kind == ModelKind::quantum_top) out << "d " << spec.d << '\n';
    out << "g " << fmt(spec.g) << '\n';
    out << "omega " << fmt(spec.omega) << '\n';
    if (spec.s) out << "s " << fmt(*spec.s) << '\n';
    if (spec.u) out << "u " << fmt(*spec.u) << '\n';
    if (spec.r) out << "r " << fmt(*spec.r) << '\n';
    if (spec.sigma) out << "sigma " << fmt(*spec.sigma) << '\n';
    for (const auto& [k, c] : spec.fhat) out << "fourier " << k << ' ' << fmt(c.real()) << ' ' << fmt(c.imag()) << '\n';
    for (std::size_t n = 0; n < spec.energies.size(); ++n) {
        out << "block " << n << ' ' << spec.energies[n].rows() << '\n';
        write_rows(out, spec.energies[n]);
    }
    for (const auto& [key, block] : spec.w) {
        out << "w " << key.first << ' ' << key.second << ' ' << block.rows() << ' ' << block.cols() << '\n';
        write_rows(out, block);
    }
    for (const auto& [key, block] : spec.couplings) {
        out << "coupling " << std::get<0>(key) << ' ' << std::get<1>(key) << ' ' << std::get<2>(key) << ' '
            << block.rows() << ' ' << block.cols() << '\n';
        write_rows(out, block);
    }
    if (spec.tail) {
        write_law(out, "tail_energy", spec.tail->energy);
        write_law(out, "tail_multiplicity", spec.tail->multiplicity);
    }
}

// ------------------------------------------------------------ sigma test

bool SigmaVerdict::consistent() const {
    if (analytic_converges) return !empirical_divergent && !certified_divergent && tail_stable;
    return empirical_divergent && certified_divergent;
}

SigmaVerdict sigma_condition_top(int d, double sigma, int n_probe) {
    if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
    if (n_probe < 4) throw DomainError("n_probe must be at least 4");
    SigmaVerdict out;
    out.d = d;
    out.sigma = sigma;
    out.n_probe = n_probe;
    out.analytic_converges = sigma > 2.0 * d - 1.0;

    // S(N) = 2 sum_{m < n < N} M_m M_n / (E_n - E_m)^sigma, grown one n at a time.
    const int n_max = 8 * n_probe;
    std::vector<double> mult(n_max), energy(n_max);
    for (int n = 0; n < n_max; ++n) {
        mult[n] = top_multiplicity(d, n);
        energy[n] = static_cast<double>(n) * (n + d - 1);
    }
    double s = 0.0;
    int next = 0;
    const std::array<int, 4> marks{n_probe, 2 * n_probe, 4 * n_probe, 8 * n_probe};
    for (int n = 0; n < n_max; ++n) {
        double row = 0.0;
        for (int m = 0; m < n; ++m) row += mult[m] / std::pow(energy[n] - energy[m], sigma);
        s += 2.0 * mult[n] * row;
        if (n + 1 == marks[next]) out.partial_sums[next++] = s;
    }
    const double d1 = out.partial_sums[1] - out.partial_sums[0];
    const double d2 = out.partial_sums[2] - out.partial_sums[1];
    const double d3 = out.partial_sums[3] - out.partial_sums[2];
    out.ratio = d2 / d1;
    out.ratio_next = d3 / d2;
    out.empirical_divergent = out.ratio_next > std::pow(2.0, -0.25);

    const TailModel tail = quantum_top_tail(d);
    const GapReport a = gap_report(quantum_top_spectra(d, n_probe), sigma, tail);
    const GapReport b = gap_report(quantum_top_spectra(d, 2 * n_probe), sigma, tail);
    out.certified = a.sigma_gap_sum;
    out.certified_doubled = b.sigma_gap_sum;
    out.certified_divergent = a.sigma_gap_divergent || b.sigma_gap_divergent;
    out.tail_stable = !out.certified_divergent && a.sigma_gap_sum.finite() && b.sigma_gap_sum.finite() &&
                      a.sigma_gap_sum.lower <= b.sigma_gap_sum.upper && b.sigma_gap_sum.lower <= a.sigma_gap_sum.upper &&
                      out.partial_sums[3] <= std::min(a.sigma_gap_sum.upper, b.sigma_gap_sum.upper);
    return out;
}

}  // namespace pdm
