#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dsmplan {

enum class ErrorCode {
  ParseError,
  UnknownDependency,
  SelfDependency,
  DuplicateId,
  LengthMismatch,
  NonSquare,
  NegativeWeight,
  NonzeroDiagonal,
  MissingTableEntry,
  MissingTokenCount,
  IncompleteAssignment,
  EmptyMatrix,
  TooLarge,
  InvalidParameter,
  UnsplittablePiece,
  DuplicateModelName,
  UnknownModel,
  PieceExceedsWindow,
  SpecMismatch,
  Io,
};

std::string_view to_string(ErrorCode code);

// Every failure surfaced by the library. `subject` names the offending
// element id, line number, model name or piece index, when there is one.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string subject, const std::string& message)
      : std::runtime_error(message), code_(code), subject_(std::move(subject)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& subject() const noexcept { return subject_; }

 private:
  ErrorCode code_;
  std::string subject_;
};

}  // namespace dsmplan
