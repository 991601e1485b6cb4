#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pdm {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shapes or index sets that do not fit together.
class StructuralError : public Error {
public:
    using Error::Error;
};

/// A caller asked for something the library does not provide.
class UsageError : public Error {
public:
    using Error::Error;
};

/// An input violates a documented precondition (symmetry, hermiticity, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Argument outside the domain of a closed-form expression.
class DomainError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    using Error::Error;
};

class NumericalFailure : public Error {
public:
    using Error::Error;
};

/// Spectra of the two Sylvester coefficients are closer than the floor.
class SpectraOverlapError : public Error {
public:
    SpectraOverlapError(const std::string& what, double distance)
        : Error(what), distance_(distance) {}
    double distance() const noexcept { return distance_; }

private:
    double distance_;
};

/// Two blocks of the graded space share spectrum, so a gap is zero.
class SingularGapError : public Error {
public:
    using Error::Error;
};

/// Dense assembly would exceed the configured dimension cap.
class MemoryGuardError : public Error {
public:
    using Error::Error;
};

/// Fourier truncation too small for the requested accuracy.
class TruncationError : public Error {
public:
    using Error::Error;
};

/// A smallness condition required by a theorem is violated.
class ThresholdRefusal : public Error {
public:
    ThresholdRefusal(const std::string& what, std::string condition, double value, double bound)
        : Error(what), condition_(std::move(condition)), value_(value), bound_(bound) {}
    const std::string& condition() const noexcept { return condition_; }
    double value() const noexcept { return value_; }
    double bound() const noexcept { return bound_; }

private:
    std::string condition_;
    double value_;
    double bound_;
};

struct ResonantTriple {
    int k;
    int m;
    int n;
    double distance;
};

/// Small divisors in the Floquet commutator step.
class ResonanceError : public Error {
public:
    ResonanceError(const std::string& what, std::vector<ResonantTriple> triples)
        : Error(what), triples_(std::move(triples)) {}
    const std::vector<ResonantTriple>& triples() const noexcept { return triples_; }

private:
    std::vector<ResonantTriple> triples_;
};

/// Norm drift of the propagator above tolerance.
class IntegratorError : public Error {
public:
    using Error::Error;
};

/// Model or config file rejected on ingest; carries the 1-based line number (0 if unknown).
class IngestError : public Error {
public:
    IngestError(const std::string& what, int line)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

}  // namespace pdm
