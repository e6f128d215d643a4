#pragma once

#include <stdexcept>
#include <string>

namespace nonharmonic {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid model or experiment configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Operation called with arguments outside its contract (wrong tag, bad range).
class UsageError : public Error {
public:
    using Error::Error;
};

/// Vector or table length does not match the model.
class ShapeError : public UsageError {
public:
    using UsageError::UsageError;
};

/// A numerical guard tripped. Subclasses name the guard.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// A quantity that must be real and nonnegative is not.
class ConsistencyError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// The admissible family fails the rank condition on the diagonal.
class AdmissibilityError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// A symbol is read outside the index window it was sampled on.
class WindowError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// An eigenfunction (nearly) vanishes at a grid point.
class WzError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class EllipticityError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// A resolvent was requested too close to the truncated spectrum.
class SpectrumError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// The principal logarithm was evaluated on its branch cut.
class BranchError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Linear solve or fixed-point iteration failed.
class SolveError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace nonharmonic
