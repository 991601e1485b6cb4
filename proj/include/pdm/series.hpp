#pragma once

#include <functional>
#include <limits>
#include <utility>
#include <vector>

namespace pdm {

/// Closed interval [lower, upper] enclosing an infinite sum.
struct Bracket {
    double lower = 0.0;
    double upper = std::numeric_limits<double>::infinity();

    double width() const { return upper - lower; }
    double mid() const { return 0.5 * (lower + upper); }
    bool finite() const { return upper < std::numeric_limits<double>::infinity(); }
    bool contains(double x) const { return lower <= x && x <= upper; }

    Bracket& operator+=(const Bracket& o) {
        lower += o.lower;
        upper += o.upper;
        return *this;
    }
    Bracket& operator*=(double s) {
        lower *= s;
        upper *= s;
        return *this;
    }
    friend Bracket operator+(Bracket a, const Bracket& b) { return a += b; }
    friend Bracket operator*(double s, Bracket a) { return a *= s; }
};

/// f(x) = sum_i c_i x^{p_i} with c_i >= 0 and p_i >= 0; nondecreasing on x >= 0.
class PowerLaw {
public:
    struct Term {
        double coefficient;
        double exponent;
    };

    PowerLaw() = default;
    explicit PowerLaw(std::vector<Term> terms);
    static PowerLaw constant(double c) { return PowerLaw({{c, 0.0}}); }
    static PowerLaw monomial(double c, double p) { return PowerLaw({{c, p}}); }

    double operator()(double x) const;
    /// f(x + h) - f(x) without cancellation for h << x.
    double increment(double x, double h) const;
    const std::vector<Term>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }

    /// Term with the largest exponent.
    Term leading() const;

private:
    std::vector<Term> terms_;
};

enum class TailShape {
    decreasing,         ///< f nonincreasing beyond the explicit prefix
    convex_decreasing,  ///< additionally convex; midpoint/trapezoid enclosure
};

struct TailSumOptions {
    TailShape shape = TailShape::convex_decreasing;
    double target_width = 1e-12;      ///< absolute width goal for the enclosure
    long min_explicit_terms = 16;
    long max_explicit_terms = 1L << 22;
};

struct TailSumResult {
    Bracket value;
    long explicit_terms = 0;
    bool divergent = false;
    bool shape_verified = true;  ///< monotonicity/convexity seen on a geometric probe grid
};

/// Enclosure of sum_{n >= start} f(n). The first terms are summed exactly; the
/// remainder is enclosed by integral comparison over [X, inf).
/// `f` returns an enclosure of each term (lower, upper).
TailSumResult tail_sum(const std::function<Bracket(double)>& f, long start,
                       const TailSumOptions& options = {});

TailSumResult tail_sum(const std::function<double(double)>& f, long start,
                       const TailSumOptions& options = {});

}  // namespace pdm
