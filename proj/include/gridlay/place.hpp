#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gridlay/layout.hpp"
#include "gridlay/netlist.hpp"
#include "gridlay/tech.hpp"

namespace gridlay {

struct PlacementConstraints {
  std::vector<std::string> fixed_left;   // leftmost slots, in this order
  std::vector<std::string> fixed_right;  // rightmost slots, in this order
  std::optional<std::vector<std::string>> order_hint;

  bool operator==(const PlacementConstraints&) const = default;
};

enum class OrderMethod { Exhaustive, GreedySwap };

std::string_view to_string(OrderMethod m);

struct OrderResult {
  std::vector<std::string> order;
  long hpwl_before = 0;
  long hpwl_after = 0;
  OrderMethod method = OrderMethod::Exhaustive;

  bool operator==(const OrderResult&) const = default;
};

nlohmann::json to_json(const OrderResult& r);

/// Free instances up to this count are searched exhaustively.
inline constexpr std::size_t kExhaustiveLimit = 8;

using Placement = std::map<std::string, std::pair<Point, Orient>>;

/// Template pin -> net for a device, from its terminals.
std::map<std::string, std::string> device_pin_nets(const Device& device, const Template& tmpl);
PlacedInstance make_instance(const Device& device, const Technology& tech, Point origin,
                             Orient orient);

/// Half-perimeter wirelength over signal nets, first access point per pin.
long hpwl(const Netlist& netlist, const Technology& tech, const Placement& placement);

/// Single abutted row at y = 0, orient R0, in the given order.
LayoutDb place_gate_row(const Netlist& netlist, const Technology& tech,
                        const std::vector<std::string>& order);

/// Searches instance orders of a single row for minimum HPWL.
OrderResult optimize_order(const Netlist& netlist, const Technology& tech,
                           const PlacementConstraints& constraints = {});

struct TransistorPlacement {
  LayoutDb db;
  Pairing pairing;
  OrderResult pair_order;  // items are named "<pmos>/<nmos>"
};

/// NMOS row at y = 0 (R0) and a mirrored PMOS row above it (MX), with
/// complementary pairs stacked in shared columns and unpaired devices
/// appended to the right end of their row.
TransistorPlacement place_transistor_rows(const Netlist& netlist, const Technology& tech,
                                          const PlacementConstraints& constraints = {});

namespace row {

struct Pin {
  int net = 0;
  int dx = 0;
  int dy = 0;
};

struct Item {
  std::string name;
  int width = 0;
  std::vector<Pin> pins;
};

/// A single-row ordering problem: items are abutted left to right from x = 0.
/// `fixed_points` are pins whose position does not depend on the order.
struct Problem {
  std::vector<Item> items;
  int net_count = 0;
  std::vector<std::vector<Point>> fixed_points;  // per net

  /// HPWL of a (possibly partial) sequence of item indices.
  long cost(const std::vector<int>& sequence) const;
};

struct Slots {
  std::vector<int> left;
  std::vector<int> right;
};

/// `baseline` is the reference order (already honouring the slots); it
/// defines hpwl_before.
OrderResult optimize(const Problem& problem, const Slots& slots, const std::vector<int>& baseline);

}  // namespace row

}  // namespace gridlay
