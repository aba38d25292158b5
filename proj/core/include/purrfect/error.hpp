#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace purrfect {

enum class Errc {
  OutOfRange,
  NotDiatonic,
  RangeOverflow,
  InvalidTiming,
  ModuleOutOfRange,
  MalformedFrame,
  WrongCondition,
  StorageFailure,
  ValidationError,
  ParseError,
  DuplicateParticipant,
  EmptyDataset,
  NotConverged,
  RankDeficient,
  DegenerateRatings,
  InsufficientData,
  OutOfScale,
  ConfigError,
  ProtocolViolation,
  ClientDisconnected,
  NetworkError,
};

std::string_view to_string(Errc code) noexcept;

// Every failure the library reports carries one of the codes above so callers
// (the CLI in particular) can map it to an exit status without string matching.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace purrfect
