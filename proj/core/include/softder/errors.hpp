#pragma once

#include <stdexcept>
#include <string>

namespace softder {

/// Broad failure class; the CLI maps each to an exit code.
enum class ErrorKind {
  Validation,  // malformed input, inconsistent dimensions, bad config
  Numerical,   // solver divergence, geometric singularities
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define SOFTDER_DEFINE_ERROR(Name, Kind)                                   \
  class Name : public Error {                                              \
   public:                                                                 \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  };

SOFTDER_DEFINE_ERROR(DimensionMismatch, Validation)
SOFTDER_DEFINE_ERROR(DegenerateEdge, Validation)
SOFTDER_DEFINE_ERROR(NonFinite, Validation)
SOFTDER_DEFINE_ERROR(LayoutMismatch, Validation)
SOFTDER_DEFINE_ERROR(TooFewSamples, Validation)
SOFTDER_DEFINE_ERROR(ParseError, Validation)
SOFTDER_DEFINE_ERROR(AntipodalTangents, Numerical)
SOFTDER_DEFINE_ERROR(NewtonDivergence, Numerical)
SOFTDER_DEFINE_ERROR(Unreachable, Numerical)
SOFTDER_DEFINE_ERROR(IkDivergence, Numerical)
SOFTDER_DEFINE_ERROR(SingularInertia, Numerical)
SOFTDER_DEFINE_ERROR(SingularLambda, Numerical)
SOFTDER_DEFINE_ERROR(IoError, Io)

#undef SOFTDER_DEFINE_ERROR

/// Config validation failure; `key_path()` names the offending key, e.g. "gains.omega".
class ValidationError : public Error {
 public:
  ValidationError(std::string key_path, const std::string& what)
      : Error(ErrorKind::Validation, key_path + ": " + what), key_path_(std::move(key_path)) {}
  const std::string& key_path() const noexcept { return key_path_; }

 private:
  std::string key_path_;
};

}  // namespace softder
