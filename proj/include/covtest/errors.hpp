#pragma once

#include <stdexcept>
#include <string>

namespace covtest {

/// Contract violations on user-supplied data (bad dimensions, non-finite
/// entries, unresolvable CSV columns, ...). Maps to CLI exit code 2.
class InvalidInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical degeneracies that put the input outside the general-position
/// regime the path algorithm assumes. Maps to CLI exit code 3.
class NumericalDegeneracy : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two candidate knots coincide within tolerance.
class KnotTieError : public NumericalDegeneracy {
 public:
  using NumericalDegeneracy::NumericalDegeneracy;
};

/// An active set lost full column rank. Carries the offending column.
class SingularityError : public NumericalDegeneracy {
 public:
  SingularityError(const std::string& what, int column)
      : NumericalDegeneracy(what), column_(column) {}
  int column() const { return column_; }

 private:
  int column_;
};

}  // namespace covtest
