#pragma once

#include <stdexcept>
#include <string>

namespace qflow {

/* Error taxonomy shared by the whole library.  The CLI maps these onto
 * process exit codes, so new failure modes should reuse one of them. */

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Operand shapes are incompatible (subsystem dims, player counts, ...).
struct DimensionError : Error {
  using Error::Error;
};

// A scalar function was evaluated outside its domain (log of a negative
// eigenvalue, tsallis exponent out of range, ...).
struct DomainError : Error {
  using Error::Error;
};

// An iterative kernel failed to converge (eigensolver, root-finder).
struct ConvergenceError : Error {
  using Error::Error;
};

// Input data violates a declared invariant; message names the offending field.
struct ValidationError : Error {
  using Error::Error;
};

// The ODE driver gave up (step underflow, state left the feasible set).
struct IntegrationError : Error {
  using Error::Error;
};

// A diagnostic was asked for data the run never produced.
struct MissingDataError : Error {
  using Error::Error;
};

}  // namespace qflow
