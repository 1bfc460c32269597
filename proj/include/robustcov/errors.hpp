#pragma once

#include <stdexcept>
#include <string>

namespace robustcov {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or non-finite input data (matrices, samples, files).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A parameter outside its admissible range.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// A direction that is not on the unit sphere.
class InvalidDirection : public Error {
 public:
  using Error::Error;
};

/// A scale-dependent quantity of the zero matrix was requested.
class UndefinedScale : public Error {
 public:
  using Error::Error;
};

/// The data carries too little information for the requested estimate.
class DegenerateSample : public Error {
 public:
  using Error::Error;
};

/// An exhaustive search would exceed its enumeration cap.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

}  // namespace robustcov
