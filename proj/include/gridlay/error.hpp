#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace gridlay {

enum class ErrorCode {
  // netlist
  UnterminatedSubckt,
  MalformedDeviceLine,
  DuplicateDeviceName,
  UnknownModel,
  NotTransistorLevel,
  // tech
  SchemaError,
  DirectionError,
  OffGridPin,
  UnknownPin,
  // layout / place
  DuplicateInstance,
  UnknownTemplate,
  Overlap,
  UnknownInstance,
  MissingTemplate,
  BadPermutation,
  UnresolvedPin,
  ConstraintConflict,
  // route
  Conflict,
  PinNetMismatch,
  UnknownNet,
  NotPerpendicular,
  Unroutable,
  // verify
  NetlistBindingError,
  // dsl / session
  SyntaxError,
  NothingToUndo,
  InvalidCommand,
  // llm bridge
  TranslationFailed,
  TransportError,
  // app
  IoError,
  BindError,
};

std::string_view to_string(ErrorCode code);

/// Every failure in the library is reported as an Error. `detail()` carries
/// a machine-readable payload (line numbers, conflicting net, parser hint)
/// that the HTTP layer forwards verbatim.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        nlohmann::json detail = nlohmann::json::object())
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const nlohmann::json& detail() const noexcept { return detail_; }

  nlohmann::json to_json() const {
    return {{"error", std::string(to_string(code_))},
            {"message", what()},
            {"detail", detail_}};
  }

 private:
  ErrorCode code_;
  nlohmann::json detail_;
};

}  // namespace gridlay
