#pragma once

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gridlay/layout.hpp"
#include "gridlay/netlist.hpp"
#include "gridlay/route.hpp"
#include "gridlay/tech.hpp"

namespace gridlay {

enum class DrcRule { R1_OFFGRID, R2_DIRECTION, R3_SPACING, R4_VIA, R5_OVERLAP };

std::string_view to_string(DrcRule rule);

struct DrcViolation {
  DrcRule rule = DrcRule::R1_OFFGRID;
  std::optional<std::string> layer;
  Point at;
  std::vector<std::string> instances;
  std::string detail;

  bool operator==(const DrcViolation&) const = default;
};

/// R1 wires on valid tracks, R2 wire layers carry a routing direction,
/// R3 distinct nets never share a point on one track, R4 vias join adjacent
/// layers at on-grid points, R5 instance boxes do not overlap.
std::vector<DrcViolation> run_drc(const LayoutDb& db, const Technology& tech);

struct GridNode {
  int layer = 0;  // index into Technology::layers
  Point at;

  friend auto operator<=>(const GridNode&, const GridNode&) = default;
};

struct Component {
  std::vector<GridNode> nodes;                            // sorted
  std::vector<std::pair<std::string, std::string>> pins;  // (instance, pin), sorted
  std::set<std::string> nets;                             // nets carried by those pins
};

struct Connectivity {
  std::vector<Component> components;  // ordered by first node
  /// Component index of each (instance, pin).
  std::map<std::pair<std::string, std::string>, std::size_t> pin_component;
};

/// Geometric connectivity: points along a wire are connected, vias join their
/// two layers, and pins attach at their access points.
Connectivity extract_connectivity(const LayoutDb& db, const Technology& tech);

enum class LvsVerdict { Match, Mismatch };

std::string_view to_string(LvsVerdict v);

struct LvsReport {
  LvsVerdict verdict = LvsVerdict::Match;
  std::vector<std::pair<std::string, int>> opens;  // (net, component count)
  std::vector<std::set<std::string>> shorts;
  std::vector<std::string> unresolved;  // nets with fewer than two placed pins

  bool operator==(const LvsReport&) const = default;
};

/// Connectivity comparison against the netlist. Throws NetlistBindingError
/// when instance pin bindings contradict the netlist.
LvsReport run_lvs(const LayoutDb& db, const Netlist& netlist, const Technology& tech);

nlohmann::json to_json(const DrcViolation& v);
nlohmann::json to_json(const LvsReport& r);

/// `{drc, lvs, wirelength}` report document.
nlohmann::json verify_report(const LayoutDb& db, const Netlist& netlist, const Technology& tech);

}  // namespace gridlay
