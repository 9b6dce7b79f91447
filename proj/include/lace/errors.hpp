#pragma once

#include <stdexcept>
#include <string>

namespace lace {

// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad arguments / malformed configuration (CLI exit code 2).
struct UsageError : Error {
    explicit UsageError(const std::string& msg) : Error(msg) {}
};

// A model cannot supply what was asked of it (coefficient order, derivatives, ...).
struct ModelError : Error {
    explicit ModelError(const std::string& msg) : Error(msg) {}
};

// Enumeration / table construction would exceed the configured budget.
struct BudgetError : Error {
    explicit BudgetError(const std::string& msg) : Error(msg) {}
};

// A denominator or ratio is too close to zero to continue.
struct SingularityError : Error {
    explicit SingularityError(const std::string& msg) : Error(msg) {}
};

// Root bracketing failed; message carries the diagnostic endpoint values.
struct BracketingError : Error {
    explicit BracketingError(const std::string& msg) : Error(msg) {}
};

// An algebraic reconstruction identity failed beyond rounding tolerance.
// Signals a bug in the engine or in a coefficient provider.
struct IdentityViolationError : Error {
    explicit IdentityViolationError(const std::string& msg) : Error(msg) {}
};

// An x-space window is too small for the requested cube average.
struct WindowError : Error {
    explicit WindowError(const std::string& msg) : Error(msg) {}
};

}  // namespace lace
