#include "gridlay/tech.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "gridlay/error.hpp"
#include "gridlay/strings.hpp"

namespace gridlay {

using nlohmann::json;

std::string_view to_string(Orient o) {
  switch (o) {
    case Orient::R0: return "R0";
    case Orient::MX: return "MX";
    case Orient::MY: return "MY";
    case Orient::R180: return "R180";
  }
  return "R0";
}

std::optional<Orient> parse_orient(std::string_view s) {
  const std::string u = to_upper(s);
  if (u == "R0") return Orient::R0;
  if (u == "MX") return Orient::MX;
  if (u == "MY") return Orient::MY;
  if (u == "R180") return Orient::R180;
  return std::nullopt;
}

std::string_view to_string(Direction d) { return d == Direction::H ? "H" : "V"; }

std::string_view to_string(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::PmosUnit: return "PMOS_UNIT";
    case TemplateKind::NmosUnit: return "NMOS_UNIT";
    case TemplateKind::GateCell: return "GATE_CELL";
  }
  return "?";
}

const Layer* Technology::find_layer(std::string_view layer_name) const {
  for (const auto& l : layers)
    if (l.name == layer_name) return &l;
  return nullptr;
}

const Layer& Technology::layer(std::string_view layer_name) const {
  if (const Layer* l = find_layer(layer_name)) return *l;
  throw Error(ErrorCode::SchemaError, "unknown layer " + std::string(layer_name),
              {{"layer", layer_name}});
}

int Technology::layer_index(std::string_view layer_name) const {
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (layers[i].name == layer_name) return static_cast<int>(i);
  return -1;
}

bool Technology::has_via(std::string_view a, std::string_view b) const {
  for (const auto& v : vias)
    if ((v.lower == a && v.upper == b) || (v.lower == b && v.upper == a)) return true;
  return false;
}

const Template* Technology::find_template(std::string_view tmpl) const {
  if (auto it = templates.find(std::string(tmpl)); it != templates.end()) return &it->second;
  for (const auto& [key, t] : templates)
    if (iequals(key, tmpl)) return &t;
  return nullptr;
}

const Template* Technology::template_for(const Device& device) const {
  switch (device.kind) {
    case DeviceKind::Pmos: return find_template("PMOS_UNIT");
    case DeviceKind::Nmos: return find_template("NMOS_UNIT");
    case DeviceKind::Subckt: return find_template(device.model);
  }
  return nullptr;
}

namespace {

[[noreturn]] void schema(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::SchemaError, where + ": " + what, {{"path", where}});
}

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& required,
                const std::set<std::string>& optional = {}) {
  if (!obj.is_object()) schema(where, "expected an object");
  for (const auto& [key, _] : obj.items())
    if (!required.count(key) && !optional.count(key)) schema(where, "unknown key '" + key + "'");
  for (const auto& key : required)
    if (!obj.contains(key)) schema(where, "missing key '" + key + "'");
}

std::string get_string(const json& obj, const char* key, const std::string& where) {
  const json& v = obj.at(key);
  if (!v.is_string()) schema(where + "." + key, "expected a string");
  return v.get<std::string>();
}

int get_int(const json& v, const std::string& where) {
  if (!v.is_number_integer()) schema(where, "expected an integer");
  return v.get<int>();
}

}  // namespace

Technology load_tech(const json& doc) {
  check_keys(doc, "tech", {"name", "layers", "vias", "templates"}, {"supply_names", "row_gap"});
  Technology tech;
  tech.name = get_string(doc, "name", "tech");

  if (doc.contains("supply_names")) {
    const json& s = doc.at("supply_names");
    if (!s.is_array()) schema("tech.supply_names", "expected an array");
    std::vector<std::string> names;
    for (const auto& n : s) {
      if (!n.is_string()) schema("tech.supply_names", "expected strings");
      names.push_back(n.get<std::string>());
    }
    tech.supply_names = SupplySet(names);
  }
  if (doc.contains("row_gap")) {
    tech.row_gap = get_int(doc.at("row_gap"), "tech.row_gap");
    if (tech.row_gap < 0) schema("tech.row_gap", "must be non-negative");
  }

  const json& layers = doc.at("layers");
  if (!layers.is_array() || layers.empty()) schema("tech.layers", "expected a non-empty array");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string where = "tech.layers[" + std::to_string(i) + "]";
    check_keys(layers[i], where, {"name", "direction", "pitch", "offset"});
    Layer l;
    l.name = get_string(layers[i], "name", where);
    const std::string dir = get_string(layers[i], "direction", where);
    if (dir == "H") l.direction = Direction::H;
    else if (dir == "V") l.direction = Direction::V;
    else schema(where + ".direction", "expected \"H\" or \"V\"");
    l.pitch = get_int(layers[i].at("pitch"), where + ".pitch");
    l.offset = get_int(layers[i].at("offset"), where + ".offset");
    if (l.pitch <= 0) schema(where + ".pitch", "must be positive");
    if (l.offset < 0 || l.offset >= l.pitch) schema(where + ".offset", "must lie in [0, pitch)");
    if (tech.find_layer(l.name)) schema(where, "duplicate layer " + l.name);
    const Direction expected = (i % 2 == 0) ? Direction::V : Direction::H;
    if (l.direction != expected)
      throw Error(ErrorCode::DirectionError,
                  "layer " + l.name + " must be " + std::string(to_string(expected)) +
                      ": directions alternate V,H,V,... from the lowest layer",
                  {{"layer", l.name}});
    tech.layers.push_back(std::move(l));
  }

  const json& vias = doc.at("vias");
  if (!vias.is_array()) schema("tech.vias", "expected an array");
  for (std::size_t i = 0; i < vias.size(); ++i) {
    const std::string where = "tech.vias[" + std::to_string(i) + "]";
    check_keys(vias[i], where, {"lower", "upper"});
    ViaRule v{get_string(vias[i], "lower", where), get_string(vias[i], "upper", where)};
    const int lo = tech.layer_index(v.lower);
    const int hi = tech.layer_index(v.upper);
    if (lo < 0 || hi < 0) schema(where, "unknown layer");
    if (hi != lo + 1) schema(where, v.lower + "/" + v.upper + " are not adjacent layers");
    tech.vias.push_back(std::move(v));
  }

  const json& templates = doc.at("templates");
  if (!templates.is_array()) schema("tech.templates", "expected an array");
  for (std::size_t i = 0; i < templates.size(); ++i) {
    const std::string where = "tech.templates[" + std::to_string(i) + "]";
    const json& tj = templates[i];
    check_keys(tj, where, {"name", "kind", "width", "height", "pins"});
    Template t;
    t.name = get_string(tj, "name", where);
    const std::string kind = get_string(tj, "kind", where);
    if (kind == "PMOS_UNIT") t.kind = TemplateKind::PmosUnit;
    else if (kind == "NMOS_UNIT") t.kind = TemplateKind::NmosUnit;
    else if (kind == "GATE_CELL") t.kind = TemplateKind::GateCell;
    else schema(where + ".kind", "unknown template kind " + kind);
    t.width = get_int(tj.at("width"), where + ".width");
    t.height = get_int(tj.at("height"), where + ".height");
    if (t.width <= 0 || t.height <= 0) schema(where, "width and height must be positive");
    if (!tj.at("pins").is_object()) schema(where + ".pins", "expected an object");
    for (const auto& [pin, points] : tj.at("pins").items()) {
      const std::string pwhere = where + ".pins." + pin;
      if (!points.is_array() || points.empty()) schema(pwhere, "expected a non-empty array");
      for (const auto& ap : points) {
        if (!ap.is_array() || ap.size() != 3 || !ap[0].is_string())
          schema(pwhere, "access point must be [layer, dx, dy]");
        AccessPoint a{ap[0].get<std::string>(), get_int(ap[1], pwhere), get_int(ap[2], pwhere)};
        const Layer* l = tech.find_layer(a.layer);
        if (!l) schema(pwhere, "unknown layer " + a.layer);
        if (a.dx < 0 || a.dx > t.width || a.dy < 0 || a.dy > t.height)
          schema(pwhere, "access point outside the template box");
        // The track coordinate must stay on-grid under the template's mirrors.
        const int coord = l->direction == Direction::V ? a.dx : a.dy;
        const int extent = l->direction == Direction::V ? t.width : t.height;
        if (!l->on_track(coord) || !l->on_track(extent - coord))
          throw Error(ErrorCode::OffGridPin,
                      t.name + "." + pin + " at (" + std::to_string(a.dx) + "," +
                          std::to_string(a.dy) + ") is off the " + l->name + " track grid",
                      {{"template", t.name}, {"pin", pin}, {"layer", a.layer}});
        t.pins[pin].push_back(std::move(a));
      }
    }
    if (tech.templates.count(t.name)) schema(where, "duplicate template " + t.name);
    tech.templates.emplace(t.name, std::move(t));
  }
  return tech;
}

Technology load_tech_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, std::string("tech: invalid JSON: ") + e.what());
  }
  return load_tech(doc);
}

Technology load_tech_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string(), {{"path", path.string()}});
  std::stringstream ss;
  ss << in.rdbuf();
  return load_tech_text(ss.str());
}

json tech_to_json(const Technology& tech) {
  json layers = json::array();
  for (const auto& l : tech.layers)
    layers.push_back({{"name", l.name},
                      {"direction", std::string(to_string(l.direction))},
                      {"pitch", l.pitch},
                      {"offset", l.offset}});
  json vias = json::array();
  for (const auto& v : tech.vias) vias.push_back({{"lower", v.lower}, {"upper", v.upper}});
  json templates = json::array();
  for (const auto& [name, t] : tech.templates) {
    json pins = json::object();
    for (const auto& [pin, aps] : t.pins) {
      json arr = json::array();
      for (const auto& a : aps) arr.push_back(json::array({a.layer, a.dx, a.dy}));
      pins[pin] = arr;
    }
    templates.push_back({{"name", name},
                         {"kind", std::string(to_string(t.kind))},
                         {"width", t.width},
                         {"height", t.height},
                         {"pins", pins}});
  }
  return {{"name", tech.name},
          {"supply_names", tech.supply_names.names()},
          {"row_gap", tech.row_gap},
          {"layers", layers},
          {"vias", vias},
          {"templates", templates}};
}

Point transform(const Template& tmpl, int dx, int dy, Point origin, Orient orient) {
  int x = dx;
  int y = dy;
  switch (orient) {
    case Orient::R0: break;
    case Orient::MY: x = tmpl.width - dx; break;
    case Orient::MX: y = tmpl.height - dy; break;
    case Orient::R180:
      x = tmpl.width - dx;
      y = tmpl.height - dy;
      break;
  }
  return {origin.x + x, origin.y + y};
}

std::vector<PinPoint> resolve_pin(const Template& tmpl, std::string_view pin, Point origin,
                                  Orient orient) {
  auto it = tmpl.pins.find(std::string(pin));
  if (it == tmpl.pins.end())
    throw Error(ErrorCode::UnknownPin, tmpl.name + " has no pin " + std::string(pin),
                {{"template", tmpl.name}, {"pin", pin}});
  std::vector<PinPoint> out;
  out.reserve(it->second.size());
  for (const auto& a : it->second) out.push_back({a.layer, transform(tmpl, a.dx, a.dy, origin, orient)});
  return out;
}

}  // namespace gridlay
