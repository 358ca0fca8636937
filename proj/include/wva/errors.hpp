#pragma once

#include <stdexcept>
#include <string>

namespace wva {

// Thrown when the postselected state is (numerically) orthogonal to the
// preselected one, so the weak value is undefined.
struct OrthogonalPostselection : std::domain_error {
    explicit OrthogonalPostselection(const std::string& what)
        : std::domain_error(what) {}
};

// Postselected-mode query against a setup that has no final state.
struct ModeMismatch : std::logic_error {
    explicit ModeMismatch(const std::string& what) : std::logic_error(what) {}
};

struct QuadratureFailure : std::runtime_error {
    explicit QuadratureFailure(const std::string& what)
        : std::runtime_error(what) {}
};

// Ratio of error probabilities where the denominator has underflowed.
struct DivisionDegenerate : std::runtime_error {
    explicit DivisionDegenerate(const std::string& what)
        : std::runtime_error(what) {}
};

// A certificate was requested outside the premise that makes it meaningful
// (e.g. a monotone-likelihood-ratio check for a non-even distribution).
struct PremiseViolated : std::logic_error {
    explicit PremiseViolated(const std::string& what)
        : std::logic_error(what) {}
};

struct NoConvergence : std::runtime_error {
    explicit NoConvergence(const std::string& what)
        : std::runtime_error(what) {}
};

// Rejection sampler found a density value above its envelope.  Indicates a
// bug in the envelope construction; must never fire in correct code.
struct EnvelopeViolation : std::logic_error {
    explicit EnvelopeViolation(const std::string& what)
        : std::logic_error(what) {}
};

struct EmptyBatch : std::invalid_argument {
    explicit EmptyBatch(const std::string& what)
        : std::invalid_argument(what) {}
};

}  // namespace wva
