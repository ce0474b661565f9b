#pragma once

#include <stdexcept>
#include <string>

namespace eitmem {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad or inconsistent input parameters.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Evaluation too close to a pole of a closed-form expression.
class SingularityError : public Error {
public:
    using Error::Error;
};

class CflError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Requested quantity is undefined on the given domain (divergent delay,
/// non-smooth derivative, undefined mixing angle, capacity overflow).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Raised when an integrator produces non-finite values or violates a
/// conservation guard.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace eitmem
