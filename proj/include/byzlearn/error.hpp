#pragma once

#include <stdexcept>
#include <string>

namespace byzlearn {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed graph, model, scenario, or trace input.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A caller-side precondition does not hold (e.g. a reduced graph without a
/// unique source component where one is required).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A scenario's network or identifiability assumption does not hold.
class AssumptionError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

/// Too few inputs for the requested fault budget / dimension.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// A computation would exceed a configured resource cap.
class ResourceLimitError : public Error {
 public:
  using Error::Error;
};

/// Not enough data for a statistical fit.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// Failure-free rule received a substituted (missing) neighbor message.
class MissingNeighborError : public Error {
 public:
  using Error::Error;
};

/// Broken internal invariant (e.g. no feasible Tverberg partition found).
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace byzlearn
