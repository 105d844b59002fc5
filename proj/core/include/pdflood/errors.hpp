#pragma once

#include <stdexcept>
#include <string>

namespace pdflood {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad user input: missing files, malformed formats, out-of-range parameters.
class InputError : public Error {
public:
    using Error::Error;
};

/// Grids that do not line up: mismatched dimensions, origins, or cell sizes.
class AlignmentError : public Error {
public:
    using Error::Error;
};

/// Numerical failure: degenerate estimators, failed factorizations,
/// sampler diagnostics outside acceptable ranges.
class NumericError : public Error {
public:
    using Error::Error;
};

} // namespace pdflood
