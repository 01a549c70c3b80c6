#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace exide {

enum class Errc {
  UnknownJudgement,
  MalformedRule,
  Io,
  Schema,
  Invariant,
  EmptyDocument,
  IdenticalRules,
  EmptyDomain,
  Network,
  HttpStatus,
  MissingTranscript,
  RateLimited,
  EmptyOutput,
  UnparseableLabel,
  AmbiguousLabel,
  IndexOutOfRange,
  LengthMismatch,
  UnknownLabel,
  PairCoverage,
  DegenerateGrid,
  DegenerateMatrix,
  Config,
};

constexpr std::string_view errc_name(Errc e) noexcept {
  switch (e) {
    case Errc::UnknownJudgement: return "UnknownJudgement";
    case Errc::MalformedRule: return "MalformedRule";
    case Errc::Io: return "IoError";
    case Errc::Schema: return "SchemaError";
    case Errc::Invariant: return "InvariantError";
    case Errc::EmptyDocument: return "EmptyDocument";
    case Errc::IdenticalRules: return "IdenticalRules";
    case Errc::EmptyDomain: return "EmptyDomain";
    case Errc::Network: return "NetworkError";
    case Errc::HttpStatus: return "HttpStatus";
    case Errc::MissingTranscript: return "MissingTranscript";
    case Errc::RateLimited: return "RateLimited";
    case Errc::EmptyOutput: return "EmptyOutput";
    case Errc::UnparseableLabel: return "UnparseableLabel";
    case Errc::AmbiguousLabel: return "AmbiguousLabel";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::UnknownLabel: return "UnknownLabel";
    case Errc::PairCoverage: return "PairCoverageError";
    case Errc::DegenerateGrid: return "DegenerateGrid";
    case Errc::DegenerateMatrix: return "DegenerateMatrix";
    case Errc::Config: return "ConfigError";
  }
  return "Error";
}

/// Every failure raised by the library. `code()` identifies the failure
/// class; `what()` is "<ErrcName>: <detail>".
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(errc_name(code)) + ": " + detail), code_(code), detail_(detail) {}

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace exide
