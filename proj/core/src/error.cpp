#include "purrfect/error.hpp"

namespace purrfect {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::NotDiatonic: return "NotDiatonic";
    case Errc::RangeOverflow: return "RangeOverflow";
    case Errc::InvalidTiming: return "InvalidTiming";
    case Errc::ModuleOutOfRange: return "ModuleOutOfRange";
    case Errc::MalformedFrame: return "MalformedFrame";
    case Errc::WrongCondition: return "WrongCondition";
    case Errc::StorageFailure: return "StorageFailure";
    case Errc::ValidationError: return "ValidationError";
    case Errc::ParseError: return "ParseError";
    case Errc::DuplicateParticipant: return "DuplicateParticipant";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::NotConverged: return "NotConverged";
    case Errc::RankDeficient: return "RankDeficient";
    case Errc::DegenerateRatings: return "DegenerateRatings";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::OutOfScale: return "OutOfScale";
    case Errc::ConfigError: return "ConfigError";
    case Errc::ProtocolViolation: return "ProtocolViolation";
    case Errc::ClientDisconnected: return "ClientDisconnected";
    case Errc::NetworkError: return "NetworkError";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace purrfect
