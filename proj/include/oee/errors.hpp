#pragma once

#include <stdexcept>
#include <string>

namespace oee {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input shape does not match a declared dimensionality.
struct DimensionError : Error {
    using Error::Error;
};

// A value lies outside the domain an operation is defined on.
struct DomainError : Error {
    using Error::Error;
};

struct ArgumentError : Error {
    using Error::Error;
};

// Importance ratio requested where the denominator distribution has no mass.
struct SupportViolationError : Error {
    using Error::Error;
};

struct TrainingError : Error {
    using Error::Error;
};

struct EvaluationError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace oee
