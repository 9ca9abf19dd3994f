#pragma once

#include <stdexcept>
#include <string>

namespace relent {

/// Malformed caller input: bad sizes, unreadable files, out-of-range ids.
/// CLI maps this to exit code 1.
struct InputError : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Structurally valid input outside an operation's mathematical domain
/// (for example a divergence that requires a strictly positive reference).
/// CLI maps this to exit code 1.
struct DomainError : public std::domain_error {
    using std::domain_error::domain_error;
};

/// A computed quantity failed an internal invariant or a guaranteed bound.
/// CLI maps this to exit code 2.
struct ViolationError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Regression fit requested on a window without enough usable points.
struct FitError : public DomainError {
    using DomainError::DomainError;
};

}  // namespace relent
