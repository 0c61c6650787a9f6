#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "gridlay/geometry.hpp"
#include "gridlay/route.hpp"

namespace gridlay {

struct PlaceCmd {
  std::string inst;
  std::optional<std::string> template_name;
  Point at;
  Orient orient = Orient::R0;
  bool operator==(const PlaceCmd&) const = default;
};

struct PlaceRowsCmd {
  bool operator==(const PlaceRowsCmd&) const = default;
};

/// An empty order means "the last optimize_order result, else netlist order".
struct PlaceRowCmd {
  std::vector<std::string> order;
  bool operator==(const PlaceRowCmd&) const = default;
};

enum class Side { Left, Right };

struct OptimizeOrderCmd {
  std::vector<std::pair<std::string, Side>> fixes;
  bool operator==(const OptimizeOrderCmd&) const = default;
};

struct MoveCmd {
  std::string inst;
  Point to;
  bool operator==(const MoveCmd&) const = default;
};

struct SwapCmd {
  std::string a;
  std::string b;
  bool operator==(const SwapCmd&) const = default;
};

/// `trunk_layer` unset means automatic track selection.
struct RouteNetCmd {
  std::string net;
  std::optional<std::string> trunk_layer;
  int track = 0;
  bool is_auto() const { return !trunk_layer.has_value(); }
  bool operator==(const RouteNetCmd&) const = default;
};

struct RoutePinsCmd {
  std::vector<PinRef> pins;
  std::string trunk_layer;
  int track = 0;
  bool operator==(const RoutePinsCmd&) const = default;
};

struct UnrouteNetCmd {
  std::string net;
  bool operator==(const UnrouteNetCmd&) const = default;
};

struct LabelCmd {
  std::string net;
  Point at;
  std::string layer;
  bool operator==(const LabelCmd&) const = default;
};

enum class ReportKind { Wirelength, Drc, Lvs };

std::string_view to_string(ReportKind k);

struct ReportCmd {
  ReportKind kind = ReportKind::Lvs;
  bool operator==(const ReportCmd&) const = default;
};

struct UndoCmd {
  bool operator==(const UndoCmd&) const = default;
};

struct CheckpointCmd {
  std::string name;
  bool operator==(const CheckpointCmd&) const = default;
};

using Command = std::variant<PlaceCmd, PlaceRowsCmd, PlaceRowCmd, OptimizeOrderCmd, MoveCmd, SwapCmd,
                             RouteNetCmd, RoutePinsCmd, UnrouteNetCmd, LabelCmd, ReportCmd, UndoCmd,
                             CheckpointCmd>;

/// Parses exactly one command. Keywords are case-insensitive, identifiers keep
/// their case, and `#` starts a comment. Throws SyntaxError whose detail holds
/// `position` (1-based column) and `hint` (e.g. `expected "track"`).
Command parse_command(std::string_view line);

/// Canonical one-line form; parse_command(print_command(c)) == c.
std::string print_command(const Command& cmd);

struct ScriptLine {
  int line = 0;
  Command command;
};

/// One command per line; blank and comment-only lines are skipped. A syntax
/// error's detail additionally carries `line`.
std::vector<ScriptLine> parse_script(std::string_view text);

/// The grammar in EBNF, as shown to users and language models.
std::string_view dsl_grammar();

}  // namespace gridlay
