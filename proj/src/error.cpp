#include "dsmplan/error.hpp"

namespace dsmplan {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnknownDependency: return "UnknownDependency";
    case ErrorCode::SelfDependency: return "SelfDependency";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NonSquare: return "NonSquare";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::NonzeroDiagonal: return "NonzeroDiagonal";
    case ErrorCode::MissingTableEntry: return "MissingTableEntry";
    case ErrorCode::MissingTokenCount: return "MissingTokenCount";
    case ErrorCode::IncompleteAssignment: return "IncompleteAssignment";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::UnsplittablePiece: return "UnsplittablePiece";
    case ErrorCode::DuplicateModelName: return "DuplicateModelName";
    case ErrorCode::UnknownModel: return "UnknownModel";
    case ErrorCode::PieceExceedsWindow: return "PieceExceedsWindow";
    case ErrorCode::SpecMismatch: return "SpecMismatch";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace dsmplan
