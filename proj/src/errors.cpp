#include "qsdlab/errors.hpp"

namespace qsdlab {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NegativeEntry: return "NegativeEntry";
    case ErrorKind::RowSumExceedsOne: return "RowSumExceedsOne";
    case ErrorKind::InvalidPartition: return "InvalidPartition";
    case ErrorKind::NotStronglyConnected: return "NotStronglyConnected";
    case ErrorKind::NoSurvivingTransition: return "NoSurvivingTransition";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::UnknownCommand: return "UnknownCommand";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::InvalidWeight: return "InvalidWeight";
    case ErrorKind::ZeroKernel: return "ZeroKernel";
    case ErrorKind::PeripheralMultiplicity: return "PeripheralMultiplicity";
    case ErrorKind::AlphaIsOne: return "AlphaIsOne";
    case ErrorKind::OracleFailure: return "OracleFailure";
    case ErrorKind::ThetaZero: return "ThetaZero";
    case ErrorKind::NotAQSD: return "NotAQSD";
    case ErrorKind::ZeroMassOnA0: return "ZeroMassOnA0";
    case ErrorKind::DegenerateWeight: return "DegenerateWeight";
    case ErrorKind::Extinct: return "Extinct";
    case ErrorKind::EtaOrthogonal: return "EtaOrthogonal";
    case ErrorKind::NotInBV: return "NotInBV";
    case ErrorKind::NoValidTheta2: return "NoValidTheta2";
    case ErrorKind::KTooSmall: return "KTooSmall";
    case ErrorKind::EmptyDomain: return "EmptyDomain";
    case ErrorKind::UnderflowEta: return "UnderflowEta";
    case ErrorKind::NoSurvivors: return "NoSurvivors";
  }
  return "Unknown";
}

}  // namespace qsdlab
