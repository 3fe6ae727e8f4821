#pragma once

#include <stdexcept>
#include <string>

namespace polyrpi {

// Thrown when matrix/vector shapes are inconsistent with the declared problem.
struct InvalidDimension : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Thrown when a plant description violates a structural requirement.
struct InvalidProblem : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Thrown for malformed configuration values (weights, counts, bounds).
struct InvalidConfig : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Thrown when an operation requires a bounded set but the input is unbounded.
struct UnboundedSet : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when an operation is only implemented up to a fixed ambient dimension.
struct UnsupportedDimension : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Generic LP-engine failure that is not a clean status.
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Pivot budget exhausted or factorization lost accuracy beyond repair.
struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// No multistart seed reached feasibility during synthesis.
struct NoFeasibleStart : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Candidate set matrix has deficient column rank (no left inverse).
struct RankDeficientL : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A scaling-bound computation hit a zero (or numerically zero) radius.
struct ZeroRho : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Random-walk sampler could not produce a valid interior point.
struct SamplingFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File/JSON ingestion failure with a human-readable location.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace polyrpi
