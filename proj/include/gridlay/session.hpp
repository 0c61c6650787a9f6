#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridlay/dsl.hpp"
#include "gridlay/layout.hpp"
#include "gridlay/netlist.hpp"
#include "gridlay/place.hpp"
#include "gridlay/tech.hpp"

namespace gridlay {

/// An editing session over one netlist. Every state change goes through
/// apply(); each applied command records the state it replaced so undo can
/// restore it. Copies are cheap enough to use as transactions.
class Session {
 public:
  Session(std::shared_ptr<const Technology> tech, Netlist netlist);

  const Technology& tech() const { return *tech_; }
  std::shared_ptr<const Technology> tech_ptr() const { return tech_; }
  const Netlist& netlist() const { return netlist_; }
  const LayoutDb& current() const { return state_.db; }
  const std::optional<OrderResult>& last_order() const { return state_.last_order; }
  const std::optional<nlohmann::json>& last_report() const { return state_.last_report; }

  /// Applies one command and returns its events. On error the session is
  /// left exactly as it was.
  nlohmann::json apply(const Command& cmd);
  nlohmann::json execute(std::string_view line) { return apply(parse_command(line)); }

  /// Throws NothingToUndo on an empty history.
  void undo();

  /// Commands currently in effect, oldest first.
  std::vector<Command> command_log() const;
  std::size_t history_size() const { return history_.size(); }
  /// Checkpoint name -> number of history entries at the time it was taken.
  const std::map<std::string, std::size_t>& checkpoints() const { return checkpoints_; }

 private:
  struct State {
    LayoutDb db;
    std::optional<OrderResult> last_order;
    PlacementConstraints row_constraints;
    std::optional<nlohmann::json> last_report;
  };
  struct Entry {
    Command command;
    State before;
  };

  State run(const Command& cmd, nlohmann::json& events) const;

  std::shared_ptr<const Technology> tech_;
  Netlist netlist_;
  State state_;
  std::vector<Entry> history_;
  std::map<std::string, std::size_t> checkpoints_;
};

/// Instances added, removed or moved and wires/vias added or removed between
/// two layouts.
nlohmann::json layout_diff(const LayoutDb& before, const LayoutDb& after);

/// Short text description of a layout for prompts and logs.
std::string layout_summary(const Session& session);

}  // namespace gridlay
