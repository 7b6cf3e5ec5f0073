#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace pulsemodes {

/// Base class for all domain errors. Each error carries a stable machine
/// readable code (used by the CLI's JSON error output) next to the human
/// readable message.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

struct InvalidArgument : Error {
  explicit InvalidArgument(const std::string& msg) : Error("invalid_argument", msg) {}
};

struct GridMismatch : Error {
  explicit GridMismatch(const std::string& msg) : Error("grid_mismatch", msg) {}
};

struct DimensionMismatch : Error {
  explicit DimensionMismatch(const std::string& msg) : Error("dimension_mismatch", msg) {}
};

/// Thrown by gram_schmidt when a candidate is (numerically) linearly
/// dependent on its predecessors; `index` names the offending candidate.
struct DegenerateBasis : Error {
  DegenerateBasis(std::size_t index, const std::string& msg)
      : Error("degenerate_basis", msg), index(index) {}
  std::size_t index;
};

/// Grid too narrow for an analytic mode family; carries the achieved
/// norm defect of the worst truncated mode.
struct TruncationError : Error {
  TruncationError(double norm_defect, const std::string& msg)
      : Error("truncation_error", msg), norm_defect(norm_defect) {}
  double norm_defect;
};

struct UncertaintyViolation : Error {
  explicit UncertaintyViolation(const std::string& msg) : Error("uncertainty_violation", msg) {}
};

struct NoCoherentAmplitude : Error {
  explicit NoCoherentAmplitude(const std::string& msg) : Error("no_coherent_amplitude", msg) {}
};

struct FactorizationError : Error {
  explicit FactorizationError(const std::string& msg) : Error("factorization_error", msg) {}
};

/// A strong-field / narrow-bin approximation was invoked outside its
/// domain of validity; the message names the violated condition.
struct ApproximationDomainError : Error {
  explicit ApproximationDomainError(const std::string& msg)
      : Error("approximation_domain", msg) {}
};

struct InsufficientData : Error {
  explicit InsufficientData(const std::string& msg) : Error("insufficient_data", msg) {}
};

struct DegenerateLO : Error {
  explicit DegenerateLO(const std::string& msg) : Error("degenerate_lo", msg) {}
};

struct SingularSchedule : Error {
  explicit SingularSchedule(const std::string& msg) : Error("singular_schedule", msg) {}
};

struct MeasurementInvalid : Error {
  explicit MeasurementInvalid(const std::string& msg) : Error("measurement_invalid", msg) {}
};

struct UndefinedQ : Error {
  explicit UndefinedQ(const std::string& msg) : Error("undefined_q", msg) {}
};

struct InvalidFilter : Error {
  explicit InvalidFilter(const std::string& msg) : Error("invalid_filter", msg) {}
};

struct BasisMismatch : Error {
  explicit BasisMismatch(const std::string& msg) : Error("basis_mismatch", msg) {}
};

struct ParseError : Error {
  explicit ParseError(const std::string& msg) : Error("parse_error", msg) {}
};

}  // namespace pulsemodes
