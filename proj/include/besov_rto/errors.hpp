#pragma once

#include <stdexcept>
#include <string>

namespace besov {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sizes that do not fit together (non-dyadic signals, operator/vector mismatch).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Coefficient vector whose length disagrees with the wavelet layout.
class LayoutError : public Error {
 public:
  using Error::Error;
};

/// Invalid model or configuration parameter.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent run configuration.
class ConfigError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

/// Argument outside the mathematical domain of a function (e.g. a quantile at u = 1).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown: singular factorizations, non-finite values.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A chain with zero variance, for which autocorrelations are undefined.
class DegenerateChainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InsufficientSamplesError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Every proposal of an RTO-MH run was invalid.
class ChainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace besov
