#pragma once

#include <stdexcept>
#include <string>

namespace conespec {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class PoleError : public Error {
 public:
  using Error::Error;
};

class UnsupportedOperation : public Error {
 public:
  using Error::Error;
};

/// Raised when mu_i - (n-2) < 0, i.e. the indicial roots are complex.
class SubcriticalMode : public Error {
 public:
  SubcriticalMode(const std::string& what, double deficit)
      : Error(what), deficit_(deficit) {}
  double deficit() const noexcept { return deficit_; }

 private:
  double deficit_;
};

class NoAdmissibleDelta : public Error {
 public:
  using Error::Error;
};

class NonSemibounded : public Error {
 public:
  using Error::Error;
};

class DegenerateGroundState : public Error {
 public:
  using Error::Error;
};

class FlowBreakdown : public Error {
 public:
  using Error::Error;
};

class InsufficientResolution : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace conespec
