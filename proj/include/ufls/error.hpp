#ifndef UFLS_ERROR_HPP
#define UFLS_ERROR_HPP

#include <stdexcept>
#include <string>

namespace ufls {

/// Input that breaks a documented schema or invariant (bad case file,
/// inconsistent scheme, non-integral timing ratio, ...).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Singular step matrix or other failure inside a linear solve.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failure reported by (or while talking to) a MILP backend.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ufls

#endif  // UFLS_ERROR_HPP
