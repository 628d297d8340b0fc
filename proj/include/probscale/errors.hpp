#pragma once

#include <stdexcept>
#include <string>

namespace probscale {

/// Argument outside the mathematical domain of an operation (bad ε, k > n, r > N, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The requested (ε, δ) leave no feasible discard rank under the chosen rule.
class InfeasibleSpecError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// A documented caller contract was broken: sample size mismatch, a spec that
/// does not validate, a calibration artifact used with a different predictor.
class ContractError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A user-supplied map returned an unusable value (non-positive sigma, NaN).
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Linear algebra or other numerical breakdown.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file (CSV / JSON).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace probscale
