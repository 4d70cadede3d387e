#pragma once

#include <stdexcept>
#include <string>

namespace clab {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised on invalid arguments or malformed input (configs, tree codes, pmfs).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A sampler produced more vertices than the caller allowed. The sample is
/// censored and must be reported as such, never silently truncated.
class SizeCapExceeded : public Error {
 public:
  explicit SizeCapExceeded(long long cap)
      : Error("size cap exceeded (" + std::to_string(cap) + " vertices)"), cap_(cap) {}
  long long cap() const noexcept { return cap_; }

 private:
  long long cap_;
};

class TruncationTooShallow : public Error {
 public:
  using Error::Error;
};

class MengerMismatch : public Error {
 public:
  MengerMismatch(int flow, int dual)
      : Error("max-flow value " + std::to_string(flow) + " differs from dual crossing length " +
              std::to_string(dual)),
        flow_(flow),
        dual_(dual) {}
  int flow() const noexcept { return flow_; }
  int dual() const noexcept { return dual_; }

 private:
  int flow_;
  int dual_;
};

class Unreachable : public Error {
 public:
  using Error::Error;
};

class SolverNotConverged : public Error {
 public:
  using Error::Error;
};

class NoCrossing : public Error {
 public:
  using Error::Error;
};

class ExcessiveBoundaryHits : public Error {
 public:
  using Error::Error;
};

class BracketTooWide : public Error {
 public:
  using Error::Error;
};

class InequalityViolated : public Error {
 public:
  using Error::Error;
};

class DegenerateInput : public Error {
 public:
  using Error::Error;
};

/// A malformed or inconsistent experiment configuration.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

}  // namespace clab
