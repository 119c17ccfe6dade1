#pragma once

// Error types shared by every module. Each carries a short machine-readable
// kind string so the CLI can report failures as JSON.

#include <stdexcept>
#include <string>

namespace rydberg {

class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

/// Argument outside the physical or numerical domain of an evaluator.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error("domain_error", what) {}
};

/// The winding term lambda^2/(4 gamma) has a pole: gamma = 0 with lambda != 0.
class SingularConfiguration : public Error {
 public:
  explicit SingularConfiguration(const std::string& what)
      : Error("singular_configuration", what) {}
};

/// Radial momentum below the WKB guard threshold.
class WkbGuardError : public Error {
 public:
  explicit WkbGuardError(const std::string& what) : Error("wkb_guard", what) {}
};

/// Analytic and finite-difference phase gradients disagree.
class CrossCheckError : public Error {
 public:
  explicit CrossCheckError(const std::string& what) : Error("cross_check_failure", what) {}
};

/// A finite-difference estimate failed its Richardson consistency test.
class LossOfSignificance : public Error {
 public:
  explicit LossOfSignificance(const std::string& what) : Error("loss_of_significance", what) {}
};

/// |psi| too small for R-based quantities (the quantum potential is 0/0).
class AmplitudeUnderflow : public Error {
 public:
  explicit AmplitudeUnderflow(const std::string& what) : Error("amplitude_underflow", what) {}
};

class ConvergenceError : public Error {
 public:
  explicit ConvergenceError(const std::string& what) : Error("non_convergence", what) {}
};

class InsufficientArc : public Error {
 public:
  explicit InsufficientArc(const std::string& what) : Error("insufficient_arc", what) {}
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error("parse_error", what) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error("validation_error", what) {}
};

}  // namespace rydberg
