#pragma once

#include <stdexcept>
#include <string>

namespace sphdir {

// Base for every error raised by the library. The CLI maps subclasses of
// NumericalError to exit code 2 and everything else to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation (rho >= 1, d < 1, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

// Input that is not on the unit sphere, or a zero vector where a direction is needed.
class GeometryError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

// Near-singular parameter region where an analytic formula is not usable.
class SingularityError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ConvergenceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace sphdir
