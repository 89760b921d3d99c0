#pragma once

#include <stdexcept>
#include <string>

namespace racesim {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file or value of the wrong type.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that violates a documented invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class TrackGenerationError : public Error {
 public:
  using Error::Error;
};

// Caller broke an API precondition (stepping a terminated env, bad shapes).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// Physics produced or received non-finite values.
class ModelError : public Error {
 public:
  using Error::Error;
};

}  // namespace racesim
