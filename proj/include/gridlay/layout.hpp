#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "gridlay/geometry.hpp"
#include "gridlay/tech.hpp"

namespace gridlay {

struct PlacedInstance {
  std::string name;
  std::string template_name;
  Point origin;
  Orient orient = Orient::R0;
  std::map<std::string, std::string> pin_nets;

  bool operator==(const PlacedInstance&) const = default;
};

/// A wire on one track. `track` is the track coordinate (x for V layers,
/// y for H layers); `span` runs along the layer direction.
struct WireSegment {
  std::string net;
  std::string layer;
  int track = 0;
  Interval span;

  bool operator==(const WireSegment&) const = default;
};

struct Via {
  std::string lower;
  std::string upper;
  Point at;
  std::string net;

  bool operator==(const Via&) const = default;
};

struct Label {
  std::string net;
  std::string layer;
  Point at;

  bool operator==(const Label&) const = default;
};

bool wire_less(const WireSegment& a, const WireSegment& b);
bool via_less(const Via& a, const Via& b);
bool label_less(const Label& a, const Label& b);

/// Layout snapshot. Containers are kept in canonical order, so two databases
/// holding the same geometry compare equal regardless of construction order.
/// All editing functions below take a snapshot and return a new one.
struct LayoutDb {
  std::string tech_name;
  std::string cell_name;
  std::map<std::string, PlacedInstance> instances;
  std::vector<WireSegment> wires;
  std::vector<Via> vias;
  std::vector<Label> labels;

  const PlacedInstance* find_instance(std::string_view name) const;
  std::set<std::string> routed_nets() const;

  bool operator==(const LayoutDb&) const = default;
};

LayoutDb empty_layout(const Technology& tech, std::string cell_name);

Box bbox(const PlacedInstance& inst, const Technology& tech);

LayoutDb place_instance(const LayoutDb& db, const Technology& tech, PlacedInstance inst);
LayoutDb move_instance(const LayoutDb& db, const Technology& tech, std::string_view name,
                       Point new_origin);
/// Exchanges origins and orientations.
LayoutDb swap_instances(const LayoutDb& db, const Technology& tech, std::string_view a,
                        std::string_view b);

/// Adds wires, merging same-net segments that overlap on one track, and
/// de-duplicates vias.
LayoutDb add_geometry(const LayoutDb& db, const std::vector<WireSegment>& wires,
                      const std::vector<Via>& vias);
LayoutDb add_label(const LayoutDb& db, Label label);
LayoutDb remove_net_geometry(const LayoutDb& db, std::string_view net);

/// Resolved access points of one placed instance pin.
std::vector<PinPoint> instance_pin_points(const PlacedInstance& inst, const Technology& tech,
                                          std::string_view pin);

nlohmann::json layout_to_json(const LayoutDb& db);
LayoutDb layout_from_json(const nlohmann::json& doc);
/// Deterministic serialization: sorted keys, sorted collections.
std::string to_canonical_json(const LayoutDb& db);
LayoutDb parse_layout_json(std::string_view text);

struct SvgOptions {
  int scale = 20;
  std::set<std::string> hide_layers;
};

std::string to_svg(const LayoutDb& db, const Technology& tech, const SvgOptions& options = {});

}  // namespace gridlay
