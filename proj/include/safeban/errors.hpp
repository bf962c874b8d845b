#pragma once

#include <stdexcept>
#include <string>

namespace safeban {

// Raised for non-PD matrices, non-positive eigenvalues and similar domain faults.
struct NumericDomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// The environment could not honour one of its contract assumptions
// (no truly safe arm in a context, warm-up arm generation exhausted).
struct EnvironmentContractError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid or incomplete experiment / policy configuration.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The estimated safe set was empty; callers fall back to a warm-up action.
struct NoSafeActionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Unsupported dimension for a visualization-only routine.
struct UnsupportedDimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

}  // namespace safeban
