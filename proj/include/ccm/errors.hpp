#pragma once

#include <stdexcept>
#include <string>

namespace ccm {

/// Base class for all toolkit errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Caller handed us something malformed: wrong dimensions, unknown names,
/// out-of-range parameters, unparseable files. Maps to CLI exit code 3.
struct InvalidInputError : Error {
  using Error::Error;
};

/// A numerical method failed on valid input: cut locus, disconnected
/// components, rank deficiency, violated certificates. Maps to CLI exit
/// code 2.
struct MethodError : Error {
  using Error::Error;
};

struct PreconditionError : InvalidInputError {
  using InvalidInputError::InvalidInputError;
};

struct CutLocusError : MethodError {
  using MethodError::MethodError;
};

struct ComponentError : MethodError {
  using MethodError::MethodError;
};

struct DegenerateInputError : MethodError {
  using MethodError::MethodError;
};

struct NumericalRankError : MethodError {
  using MethodError::MethodError;
};

struct NotTangentError : MethodError {
  using MethodError::MethodError;
};

struct CertificateViolationError : MethodError {
  using MethodError::MethodError;
};

struct CertificateDegenerateError : MethodError {
  using MethodError::MethodError;
};

struct NotImplementedError : InvalidInputError {
  using InvalidInputError::InvalidInputError;
};

}  // namespace ccm
