#pragma once

#include <stdexcept>
#include <string>

namespace tsids {

/// Base class for every error this library throws.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input data (bad CSV/JSONL rows, unreadable files).
class parse_error : public error {
public:
    using error::error;
};

/// Structurally valid input that violates a contract (out-of-range field,
/// inconsistent sizes, bad configuration). Maps to CLI exit code 2.
class validation_error : public error {
public:
    using error::error;
};

/// Numeric failure: degenerate series, singular system, undefined quantity.
/// Maps to CLI exit code 3.
class numeric_error : public error {
public:
    using error::error;
};

/// Optimization failure (divergence, non-finite loss). Maps to CLI exit code 3.
class fit_error : public error {
public:
    using error::error;
};

} // namespace tsids
