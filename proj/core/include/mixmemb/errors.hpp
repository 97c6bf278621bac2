#pragma once

#include <stdexcept>
#include <string>

namespace mixmemb {

// Base class for all failures raised by this library. Argument validation
// uses std::invalid_argument directly.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Eigensolver did not reach the requested residual within its iteration
// budget. Carries the best residual that was achieved.
class ConvergenceFailure : public Error {
 public:
  ConvergenceFailure(const std::string& msg, double best_residual)
      : Error(msg), best_residual(best_residual) {}
  double best_residual;
};

// One of the top-K eigenvalues is non-positive (or below the numerical
// floor), so E^{-1/2} cannot be formed.
class RankDeficiency : public Error {
 public:
  using Error::Error;
};

// No eps0 on the adaptation grid produced exactly K representatives.
class PureSetNotFound : public Error {
 public:
  using Error::Error;
};

// The selected pure rows form a matrix whose condition number exceeds the
// configured maximum.
class IllConditionedPureSet : public Error {
 public:
  using Error::Error;
};

// The two bipartition halves could not be aligned to a common community
// labelling.
class MergeFailure : public Error {
 public:
  using Error::Error;
};

// Degrees required by the tau formula are zero over the candidate set.
class DegenerateDegrees : public Error {
 public:
  using Error::Error;
};

// The candidate pure set is empty (all-zero embedding).
class EmptyCandidateSet : public Error {
 public:
  using Error::Error;
};

// Malformed input file. line_number is 1-based; 0 when not line-specific.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, long line_number = 0)
      : Error(msg), line_number(line_number) {}
  long line_number;
};

}  // namespace mixmemb
