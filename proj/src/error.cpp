#include "gridlay/error.hpp"

namespace gridlay {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnterminatedSubckt: return "UnterminatedSubckt";
    case ErrorCode::MalformedDeviceLine: return "MalformedDeviceLine";
    case ErrorCode::DuplicateDeviceName: return "DuplicateDeviceName";
    case ErrorCode::UnknownModel: return "UnknownModel";
    case ErrorCode::NotTransistorLevel: return "NotTransistorLevel";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::DirectionError: return "DirectionError";
    case ErrorCode::OffGridPin: return "OffGridPin";
    case ErrorCode::UnknownPin: return "UnknownPin";
    case ErrorCode::DuplicateInstance: return "DuplicateInstance";
    case ErrorCode::UnknownTemplate: return "UnknownTemplate";
    case ErrorCode::Overlap: return "Overlap";
    case ErrorCode::UnknownInstance: return "UnknownInstance";
    case ErrorCode::MissingTemplate: return "MissingTemplate";
    case ErrorCode::BadPermutation: return "BadPermutation";
    case ErrorCode::UnresolvedPin: return "UnresolvedPin";
    case ErrorCode::ConstraintConflict: return "ConstraintConflict";
    case ErrorCode::Conflict: return "Conflict";
    case ErrorCode::PinNetMismatch: return "PinNetMismatch";
    case ErrorCode::UnknownNet: return "UnknownNet";
    case ErrorCode::NotPerpendicular: return "NotPerpendicular";
    case ErrorCode::Unroutable: return "Unroutable";
    case ErrorCode::NetlistBindingError: return "NetlistBindingError";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::NothingToUndo: return "NothingToUndo";
    case ErrorCode::InvalidCommand: return "InvalidCommand";
    case ErrorCode::TranslationFailed: return "TranslationFailed";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::BindError: return "BindError";
  }
  return "Unknown";
}

}  // namespace gridlay
