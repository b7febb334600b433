#pragma once

#include <stdexcept>
#include <string>

namespace rdrrt {

/// Bad input data or configuration. Maps to CLI exit code 1.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One side of the threshold holds no observations inside the window.
class EmptyArmError : public InputError {
public:
    EmptyArmError() : InputError("empty arm") {}
};

/// Numerical failure of an estimator or sampler. Maps to CLI exit code 2.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The estimand is not identified from the data at hand (zero or wrong-signed denominator).
class NonIdentifiedError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace rdrrt
