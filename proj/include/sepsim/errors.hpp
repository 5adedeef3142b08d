#pragma once

#include <stdexcept>
#include <string>

namespace sepsim {

struct SimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Lattice construction rejected (L < 3, or L^d does not fit the index range).
struct DegenerateLattice : SimError {
    using SimError::SimError;
};
struct OverflowError : SimError {
    using SimError::SimError;
};

// A component index was requested on a scalar function, or shapes mismatch.
struct UsageError : SimError {
    using SimError::SimError;
};

// Initial law infeasible: some site would need Bernoulli parameter > 1.
struct ParameterExceedsOne : SimError {
    using SimError::SimError;
};

struct EmptySystem : SimError {
    using SimError::SimError;
};
struct BudgetError : SimError {
    using SimError::SimError;
};

struct DuplicatePoints : SimError {
    using SimError::SimError;
};
struct StateSpaceTooLarge : SimError {
    StateSpaceTooLarge(const std::string& msg, std::int64_t states)
        : SimError(msg), state_count(states) {}
    std::int64_t state_count;
};

struct InfeasibleRegime : SimError {
    using SimError::SimError;
};
struct RangeError : SimError {
    using SimError::SimError;
};

struct InsufficientSamples : SimError {
    using SimError::SimError;
};
struct DegenerateSample : SimError {
    using SimError::SimError;
};

// Aggregated, human-readable configuration problems.
struct ConfigError : SimError {
    using SimError::SimError;
};

// A pathwise identity failed; the run is not trustworthy and must abort.
struct AuditFailure : SimError {
    using SimError::SimError;
};

}  // namespace sepsim
