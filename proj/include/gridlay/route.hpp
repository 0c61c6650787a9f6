#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gridlay/layout.hpp"
#include "gridlay/tech.hpp"

namespace gridlay {

struct PinRef {
  std::string instance;
  std::string pin;
  int access = 0;  // index into the pin's access points

  bool operator==(const PinRef&) const = default;
};

struct Claim {
  Interval span;
  std::string net;
};

/// Per-track record of which net owns which interval. Built from a layout:
/// wires, both ends of every via, and every instance pin access point.
/// Distinct nets may not share a grid point on one track.
class Occupancy {
 public:
  using Key = std::pair<std::string, int>;  // (layer, track)

  static Occupancy from_layout(const LayoutDb& db, const Technology& tech);

  void claim(const std::string& layer, int track, Interval span, const std::string& net);
  void claim_point(const Technology& tech, const std::string& layer, Point p, const std::string& net);
  /// First claim of another net overlapping `span` on the track.
  std::optional<Claim> conflict(const std::string& layer, int track, Interval span,
                                std::string_view net) const;

  const std::map<Key, std::vector<Claim>>& tracks() const { return tracks_; }

 private:
  std::map<Key, std::vector<Claim>> tracks_;
};

/// Single-trunk topology: one trunk on the chosen track, one branch per pin on
/// the adjacent perpendicular layer, vias at each layer change.
struct RoutePlan {
  std::string net;
  WireSegment trunk;
  std::vector<WireSegment> branches;
  std::vector<Via> vias;

  long wire_length() const;
  /// Auto-routing cost: wire length plus one unit per via.
  long score() const { return wire_length() + static_cast<long>(vias.size()); }
};

struct RouteOutcome {
  LayoutDb db;
  std::optional<RoutePlan> plan;  // empty when there was nothing to connect
  std::vector<std::string> warnings;
};

/// Every (instance, pin) of the layout bound to `net`, sorted.
std::vector<PinRef> net_pins(const LayoutDb& db, std::string_view net);

/// Builds the geometry for a trunk on `trunk_layer` at track coordinate
/// `track` without touching occupancy.
RoutePlan plan_route(const LayoutDb& db, const Technology& tech, const std::string& net,
                     const std::vector<PinRef>& pins, const std::string& trunk_layer, int track);

/// Throws Conflict when the plan would touch another net's claims.
void check_plan(const RoutePlan& plan, const Occupancy& occupancy, const Technology& tech);

/// Routes `pins` (default: all pins of `net`) through the given track.
RouteOutcome route_via_track(const LayoutDb& db, const Technology& tech, const std::string& net,
                             const std::string& trunk_layer, int track,
                             std::optional<std::vector<PinRef>> pins = std::nullopt);

/// Routes the pins of `pins` that all carry the same net; the net is inferred.
RouteOutcome route_pins(const LayoutDb& db, const Technology& tech, const std::vector<PinRef>& pins,
                        const std::string& trunk_layer, int track);

inline constexpr int kAutoWindow = 2;
inline constexpr int kAutoWindowMax = 6;

/// Picks the conflict-free trunk with the lowest score; ties go to the lower
/// layer, then the lower track.
RouteOutcome auto_route_net(const LayoutDb& db, const Technology& tech, const std::string& net);

LayoutDb unroute_net(const LayoutDb& db, std::string_view net);

struct Wirelength {
  std::map<std::string, long> per_net;
  std::map<std::string, int> vias_per_net;
  long total = 0;     // signal nets only
  int via_count = 0;  // signal nets only
};

Wirelength routed_wirelength(const LayoutDb& db, const SupplySet& supplies);

nlohmann::json to_json(const Wirelength& wl);

}  // namespace gridlay
