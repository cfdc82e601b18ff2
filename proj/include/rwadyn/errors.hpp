#pragma once
// Exception taxonomy. Every failure mode raised by the library derives from
// RwadynError and carries an ExitClass so the CLI can map it to a stable
// process exit code (config -> 2, numeric -> 3, invariant -> 4).

#include <stdexcept>
#include <string>

namespace rwadyn {

enum class ExitClass : int {
  Config = 2,     // malformed or inconsistent user input
  Numeric = 3,    // a numerical method failed to reach its tolerance
  Invariant = 4,  // an internal mathematical invariant was violated
};

class RwadynError : public std::runtime_error {
public:
  RwadynError(ExitClass cls, const std::string& what)
      : std::runtime_error(what), cls_(cls) {}
  ExitClass exit_class() const noexcept { return cls_; }

private:
  ExitClass cls_;
};

// A matrix that must be Hermitian is not, beyond tolerance.
class NotHermitian : public RwadynError {
public:
  explicit NotHermitian(const std::string& what)
      : RwadynError(ExitClass::Invariant, what) {}
};

// A scalar function was evaluated outside its domain (NaN/Inf produced).
class DomainError : public RwadynError {
public:
  explicit DomainError(const std::string& what)
      : RwadynError(ExitClass::Numeric, what) {}
};

// The Sylvester/Lyapunov operator has a (near-)zero eigenvalue sum.
class SingularLyapunov : public RwadynError {
public:
  explicit SingularLyapunov(const std::string& what)
      : RwadynError(ExitClass::Numeric, what) {}
};

// An initial condition fails its structural requirements.
class InvalidState : public RwadynError {
public:
  explicit InvalidState(const std::string& what)
      : RwadynError(ExitClass::Config, what) {}
};

// A coupling spectral density evaluated negative.
class NegativeSpectralDensity : public RwadynError {
public:
  explicit NegativeSpectralDensity(const std::string& what)
      : RwadynError(ExitClass::Config, what) {}
};

// A reservoir occupation operator has negative weight.
class NonPositiveOccupation : public RwadynError {
public:
  explicit NonPositiveOccupation(const std::string& what)
      : RwadynError(ExitClass::Config, what) {}
};

// An occupation profile lacks the smoothness a long-time expansion needs.
class NonSmoothOccupation : public RwadynError {
public:
  explicit NonSmoothOccupation(const std::string& what)
      : RwadynError(ExitClass::Config, what) {}
};

// Adaptive quadrature exhausted its subdivision budget.
class QuadratureFailure : public RwadynError {
public:
  explicit QuadratureFailure(const std::string& what)
      : RwadynError(ExitClass::Numeric, what) {}
};

// A Laplace-type integral does not converge at the requested point.
class DivergentLaplace : public RwadynError {
public:
  explicit DivergentLaplace(const std::string& what)
      : RwadynError(ExitClass::Numeric, what) {}
};

// Two discretized objects live on incompatible grids.
class GridMismatch : public RwadynError {
public:
  explicit GridMismatch(const std::string& what)
      : RwadynError(ExitClass::Config, what) {}
};

// The integration step is too large for the corrector to contract.
class StepTooLarge : public RwadynError {
public:
  explicit StepTooLarge(const std::string& what)
      : RwadynError(ExitClass::Numeric, what) {}
};

// A requested dense problem exceeds the hard size guard.
class DimensionTooLarge : public RwadynError {
public:
  explicit DimensionTooLarge(const std::string& what)
      : RwadynError(ExitClass::Config, what) {}
};

// A discretization window fails to capture the required spectral weight.
class WindowTooNarrow : public RwadynError {
public:
  explicit WindowTooNarrow(const std::string& what)
      : RwadynError(ExitClass::Config, what) {}
};

// Two time series being compared were produced on different horizons.
class HorizonMismatch : public RwadynError {
public:
  explicit HorizonMismatch(const std::string& what)
      : RwadynError(ExitClass::Config, what) {}
};

// A hypothesis required by the long-time construction fails (e.g. the
// dissipative part of the generator is not strictly positive).
class HypothesisViolated : public RwadynError {
public:
  explicit HypothesisViolated(const std::string& what)
      : RwadynError(ExitClass::Invariant, what) {}
};

// A scenario file is syntactically valid JSON but semantically wrong.
class ConfigError : public RwadynError {
public:
  ConfigError(const std::string& field, const std::string& what)
      : RwadynError(ExitClass::Config, field + ": " + what), field_(field) {}
  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

}  // namespace rwadyn
