#pragma once

#include <stdexcept>
#include <string>

namespace kdilate {

// Bad arguments or a point outside the domain of a map.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical stage could not produce a trustworthy result (non-finite
// values, divergence, evaluation too close to a non-smooth locus, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Query outside the encoded homotopy fact table, or a malformed certificate
// graph.
class LedgerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kdilate
