#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridlay/geometry.hpp"
#include "gridlay/netlist.hpp"

namespace gridlay {

enum class Direction { H, V };

std::string_view to_string(Direction d);

/// A routing layer. Tracks are the lines `offset + k * pitch`; for a V layer
/// the track coordinate is x, for an H layer it is y.
struct Layer {
  std::string name;
  Direction direction = Direction::V;
  int pitch = 1;
  int offset = 0;

  bool on_track(int coord) const { return floor_mod(coord - offset, pitch) == 0; }
  /// Coordinate that selects the track a point lies on.
  int track_of(Point p) const { return direction == Direction::V ? p.x : p.y; }
  /// Coordinate that runs along the track.
  int along(Point p) const { return direction == Direction::V ? p.y : p.x; }
  Point point(int track, int along_coord) const {
    return direction == Direction::V ? Point{track, along_coord} : Point{along_coord, track};
  }

  bool operator==(const Layer&) const = default;
};

struct AccessPoint {
  std::string layer;
  int dx = 0;
  int dy = 0;

  bool operator==(const AccessPoint&) const = default;
};

enum class TemplateKind { PmosUnit, NmosUnit, GateCell };

std::string_view to_string(TemplateKind kind);

struct Template {
  std::string name;
  TemplateKind kind = TemplateKind::GateCell;
  int width = 1;
  int height = 1;
  std::map<std::string, std::vector<AccessPoint>> pins;

  bool operator==(const Template&) const = default;
};

struct ViaRule {
  std::string lower;
  std::string upper;

  bool operator==(const ViaRule&) const = default;
};

struct PinPoint {
  std::string layer;
  Point at;

  bool operator==(const PinPoint&) const = default;
};

class Technology {
 public:
  std::string name;
  std::vector<Layer> layers;  // bottom-up
  std::vector<ViaRule> vias;
  std::map<std::string, Template> templates;
  SupplySet supply_names;
  int row_gap = 2;

  const Layer* find_layer(std::string_view layer) const;
  const Layer& layer(std::string_view layer) const;
  /// Position in the bottom-up stack, or -1.
  int layer_index(std::string_view layer) const;
  bool has_via(std::string_view a, std::string_view b) const;
  const Template* find_template(std::string_view tmpl) const;

  /// Template used for a netlist device: PMOS_UNIT / NMOS_UNIT for MOS,
  /// the subcircuit name for X instances. Null when the tech lacks it.
  const Template* template_for(const Device& device) const;

  bool operator==(const Technology&) const = default;
};

Technology load_tech(const nlohmann::json& doc);
Technology load_tech_text(std::string_view text);
Technology load_tech_file(const std::filesystem::path& path);

nlohmann::json tech_to_json(const Technology& tech);

/// Transforms a template pin's access points by `orient` and translates by
/// `origin`. Mirroring uses the template box, so MX maps dy to height - dy.
std::vector<PinPoint> resolve_pin(const Template& tmpl, std::string_view pin, Point origin,
                                  Orient orient);

Point transform(const Template& tmpl, int dx, int dy, Point origin, Orient orient);

}  // namespace gridlay
