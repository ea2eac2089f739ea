#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qsdlab {

enum class ErrorKind {
  // input and structural validation
  DimensionMismatch,
  NegativeEntry,
  RowSumExceedsOne,
  InvalidPartition,
  NotStronglyConnected,
  NoSurvivingTransition,
  ParseError,
  UnknownCommand,
  IndexOutOfRange,
  InvalidWeight,
  // spectral
  ZeroKernel,
  PeripheralMultiplicity,
  AlphaIsOne,
  OracleFailure,
  // measures and conditioning
  ThetaZero,
  NotAQSD,
  ZeroMassOnA0,
  DegenerateWeight,
  Extinct,
  EtaOrthogonal,
  NotInBV,
  // constructions
  NoValidTheta2,
  KTooSmall,
  EmptyDomain,
  UnderflowEta,
  NoSurvivors,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library. `kind()` is stable and machine-readable;
/// the CLI serializes it verbatim into error objects.
class QsdError : public std::runtime_error {
public:
  QsdError(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

}  // namespace qsdlab
