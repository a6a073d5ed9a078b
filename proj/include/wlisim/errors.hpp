#pragma once

#include <stdexcept>
#include <string>

namespace wlisim {

/// Argument outside the physical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Sellmeier pole hit (lambda^2 == C_i).
class SingularityError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Normal equations of a least-squares problem are singular.
class RankDeficientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A fit the workflow depends on did not converge.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file (spectrogram CSV, config JSON).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace wlisim
