#pragma once

#include <stdexcept>
#include <string>

namespace srcrec {

// Shape mismatch between operands.
struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input: bad ids, duplicates, out-of-range configuration values.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Value outside the mathematical domain of an operation.
struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// A documented precondition does not hold (all-masked softmax, stochastic
// world passed to a deterministic planner, enumeration over the cap).
struct PreconditionError : std::runtime_error {
    explicit PreconditionError(const std::string& what) : std::runtime_error(what) {}
};

// Episode whose initial exam is already at the mastery ceiling; the caller
// is expected to resample.
struct DegenerateEpisodeError : std::runtime_error {
    explicit DegenerateEpisodeError(const std::string& what) : std::runtime_error(what) {}
};

// Training produced a non-finite loss. Carries a dump of the offending batch.
struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace srcrec
