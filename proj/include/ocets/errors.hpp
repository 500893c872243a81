#ifndef OCETS_ERRORS_HPP
#define OCETS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ocets {

// Exit-code buckets used by the CLI: 1 config, 2 data, 3 numeric, 4 invariant.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct ParseError : Error {
    using Error::Error;
};

struct SchemaError : Error {
    using Error::Error;
};

struct InsufficientData : Error {
    using Error::Error;
};

struct InvalidParameter : Error {
    using Error::Error;
};

struct InvalidDimension : Error {
    using Error::Error;
};

struct InvalidInput : Error {
    using Error::Error;
};

struct OutOfSupport : Error {
    using Error::Error;
};

struct DegenerateDistribution : Error {
    using Error::Error;
};

struct SingularMatrix : Error {
    SingularMatrix(const std::string& msg, double pivot)
        : Error(msg), smallest_pivot(pivot) {}
    double smallest_pivot;
};

struct PreconditionError : Error {
    using Error::Error;
};

struct InvariantViolation : Error {
    using Error::Error;
};

}  // namespace ocets

#endif
