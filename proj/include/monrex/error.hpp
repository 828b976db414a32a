#pragma once

#include <stdexcept>
#include <string>

namespace monrex {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed file contents.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that violates a model, dataset or argument invariant.
// `layer` is the model layer index the problem was found in, or -1 when the
// problem is not tied to a layer.
class ValidationError : public Error {
 public:
  ValidationError(int layer, std::string field, const std::string& what);

  int layer() const { return layer_; }
  const std::string& field() const { return field_; }

 private:
  int layer_;
  std::string field_;
};

// An exhaustive enumeration was asked to go beyond its configured caps.
class BudgetError : public Error {
 public:
  using Error::Error;
};

}  // namespace monrex
