#include "gridlay/layout.hpp"

#include <algorithm>
#include <sstream>
#include <tuple>

#include "gridlay/error.hpp"

namespace gridlay {

using nlohmann::json;

bool wire_less(const WireSegment& a, const WireSegment& b) {
  return std::tie(a.layer, a.track, a.span.lo, a.net, a.span.hi) <
         std::tie(b.layer, b.track, b.span.lo, b.net, b.span.hi);
}

bool via_less(const Via& a, const Via& b) {
  return std::tie(a.lower, a.upper, a.at.x, a.at.y, a.net) <
         std::tie(b.lower, b.upper, b.at.x, b.at.y, b.net);
}

bool label_less(const Label& a, const Label& b) {
  return std::tie(a.layer, a.at.x, a.at.y, a.net) < std::tie(b.layer, b.at.x, b.at.y, b.net);
}

const PlacedInstance* LayoutDb::find_instance(std::string_view name) const {
  if (auto it = instances.find(std::string(name)); it != instances.end()) return &it->second;
  return nullptr;
}

std::set<std::string> LayoutDb::routed_nets() const {
  std::set<std::string> nets;
  for (const auto& w : wires) nets.insert(w.net);
  for (const auto& v : vias) nets.insert(v.net);
  return nets;
}

LayoutDb empty_layout(const Technology& tech, std::string cell_name) {
  LayoutDb db;
  db.tech_name = tech.name;
  db.cell_name = std::move(cell_name);
  return db;
}

Box bbox(const PlacedInstance& inst, const Technology& tech) {
  const Template* t = tech.find_template(inst.template_name);
  if (!t)
    throw Error(ErrorCode::UnknownTemplate, "unknown template " + inst.template_name,
                {{"template", inst.template_name}});
  return {inst.origin.x, inst.origin.y, inst.origin.x + t->width, inst.origin.y + t->height};
}

namespace {

void check_overlap(const LayoutDb& db, const Technology& tech, const PlacedInstance& inst) {
  const Box box = bbox(inst, tech);
  for (const auto& [name, other] : db.instances) {
    if (name == inst.name) continue;
    if (box.overlaps(bbox(other, tech)))
      throw Error(ErrorCode::Overlap, inst.name + " overlaps " + name,
                  {{"instance", inst.name}, {"existing", name}});
  }
}

PlacedInstance& require(LayoutDb& db, std::string_view name) {
  auto it = db.instances.find(std::string(name));
  if (it == db.instances.end())
    throw Error(ErrorCode::UnknownInstance, "unknown instance " + std::string(name),
                {{"instance", name}});
  return it->second;
}

}  // namespace

LayoutDb place_instance(const LayoutDb& db, const Technology& tech, PlacedInstance inst) {
  if (db.instances.count(inst.name))
    throw Error(ErrorCode::DuplicateInstance, "instance " + inst.name + " already placed",
                {{"instance", inst.name}});
  const Template* t = tech.find_template(inst.template_name);
  if (!t)
    throw Error(ErrorCode::UnknownTemplate, "unknown template " + inst.template_name,
                {{"template", inst.template_name}});
  inst.template_name = t->name;
  for (const auto& [pin, _] : t->pins)
    if (!inst.pin_nets.count(pin))
      throw Error(ErrorCode::UnresolvedPin, inst.name + ": no net bound to pin " + pin,
                  {{"instance", inst.name}, {"pin", pin}});
  for (const auto& [pin, _] : inst.pin_nets)
    if (!t->pins.count(pin))
      throw Error(ErrorCode::UnknownPin, t->name + " has no pin " + pin,
                  {{"template", t->name}, {"pin", pin}});
  check_overlap(db, tech, inst);
  LayoutDb out = db;
  out.instances.emplace(inst.name, std::move(inst));
  return out;
}

LayoutDb move_instance(const LayoutDb& db, const Technology& tech, std::string_view name,
                       Point new_origin) {
  LayoutDb out = db;
  PlacedInstance& inst = require(out, name);
  inst.origin = new_origin;
  check_overlap(out, tech, inst);
  return out;
}

LayoutDb swap_instances(const LayoutDb& db, const Technology& tech, std::string_view a,
                        std::string_view b) {
  LayoutDb out = db;
  PlacedInstance& ia = require(out, a);
  PlacedInstance& ib = require(out, b);
  std::swap(ia.origin, ib.origin);
  std::swap(ia.orient, ib.orient);
  check_overlap(out, tech, ia);
  check_overlap(out, tech, ib);
  return out;
}

LayoutDb add_geometry(const LayoutDb& db, const std::vector<WireSegment>& wires,
                      const std::vector<Via>& vias) {
  LayoutDb out = db;
  for (WireSegment w : wires) {
    bool merged = true;
    while (merged) {
      merged = false;
      for (auto it = out.wires.begin(); it != out.wires.end(); ++it) {
        if (it->net == w.net && it->layer == w.layer && it->track == w.track &&
            it->span.overlaps(w.span)) {
          w.span = {std::min(w.span.lo, it->span.lo), std::max(w.span.hi, it->span.hi)};
          out.wires.erase(it);
          merged = true;
          break;
        }
      }
    }
    out.wires.push_back(std::move(w));
  }
  std::sort(out.wires.begin(), out.wires.end(), wire_less);
  for (const auto& v : vias)
    if (std::find(out.vias.begin(), out.vias.end(), v) == out.vias.end()) out.vias.push_back(v);
  std::sort(out.vias.begin(), out.vias.end(), via_less);
  return out;
}

LayoutDb add_label(const LayoutDb& db, Label label) {
  LayoutDb out = db;
  if (std::find(out.labels.begin(), out.labels.end(), label) == out.labels.end())
    out.labels.push_back(std::move(label));
  std::sort(out.labels.begin(), out.labels.end(), label_less);
  return out;
}

LayoutDb remove_net_geometry(const LayoutDb& db, std::string_view net) {
  LayoutDb out = db;
  std::erase_if(out.wires, [&](const WireSegment& w) { return w.net == net; });
  std::erase_if(out.vias, [&](const Via& v) { return v.net == net; });
  return out;
}

std::vector<PinPoint> instance_pin_points(const PlacedInstance& inst, const Technology& tech,
                                          std::string_view pin) {
  const Template* t = tech.find_template(inst.template_name);
  if (!t)
    throw Error(ErrorCode::UnknownTemplate, "unknown template " + inst.template_name,
                {{"template", inst.template_name}});
  return resolve_pin(*t, pin, inst.origin, inst.orient);
}

json layout_to_json(const LayoutDb& db) {
  json instances = json::array();
  for (const auto& [name, inst] : db.instances)
    instances.push_back({{"name", name},
                         {"template", inst.template_name},
                         {"origin", {inst.origin.x, inst.origin.y}},
                         {"orient", std::string(to_string(inst.orient))},
                         {"pin_nets", inst.pin_nets}});
  json wires = json::array();
  for (const auto& w : db.wires)
    wires.push_back({{"net", w.net}, {"layer", w.layer}, {"track", w.track}, {"span", {w.span.lo, w.span.hi}}});
  json vias = json::array();
  for (const auto& v : db.vias)
    vias.push_back({{"layers", {v.lower, v.upper}}, {"x", v.at.x}, {"y", v.at.y}, {"net", v.net}});
  json labels = json::array();
  for (const auto& l : db.labels)
    labels.push_back({{"net", l.net}, {"layer", l.layer}, {"x", l.at.x}, {"y", l.at.y}});
  return {{"tech_name", db.tech_name}, {"cell_name", db.cell_name}, {"instances", instances},
          {"wires", wires},           {"vias", vias},               {"labels", labels}};
}

namespace {

[[noreturn]] void bad_layout(const std::string& what) {
  throw Error(ErrorCode::SchemaError, "layout: " + what);
}

}  // namespace

LayoutDb layout_from_json(const json& doc) {
  try {
    LayoutDb db;
    db.tech_name = doc.at("tech_name").get<std::string>();
    db.cell_name = doc.at("cell_name").get<std::string>();
    for (const auto& ij : doc.at("instances")) {
      PlacedInstance inst;
      inst.name = ij.at("name").get<std::string>();
      inst.template_name = ij.at("template").get<std::string>();
      inst.origin = {ij.at("origin").at(0).get<int>(), ij.at("origin").at(1).get<int>()};
      auto orient = parse_orient(ij.at("orient").get<std::string>());
      if (!orient) bad_layout("bad orient for " + inst.name);
      inst.orient = *orient;
      inst.pin_nets = ij.at("pin_nets").get<std::map<std::string, std::string>>();
      if (db.instances.count(inst.name)) bad_layout("duplicate instance " + inst.name);
      db.instances.emplace(inst.name, std::move(inst));
    }
    for (const auto& wj : doc.at("wires")) {
      WireSegment w{wj.at("net").get<std::string>(), wj.at("layer").get<std::string>(),
                    wj.at("track").get<int>(),
                    {wj.at("span").at(0).get<int>(), wj.at("span").at(1).get<int>()}};
      db.wires.push_back(std::move(w));
    }
    for (const auto& vj : doc.at("vias"))
      db.vias.push_back({vj.at("layers").at(0).get<std::string>(), vj.at("layers").at(1).get<std::string>(),
                         {vj.at("x").get<int>(), vj.at("y").get<int>()}, vj.at("net").get<std::string>()});
    for (const auto& lj : doc.at("labels"))
      db.labels.push_back({lj.at("net").get<std::string>(), lj.at("layer").get<std::string>(),
                           {lj.at("x").get<int>(), lj.at("y").get<int>()}});
    std::sort(db.wires.begin(), db.wires.end(), wire_less);
    std::sort(db.vias.begin(), db.vias.end(), via_less);
    std::sort(db.labels.begin(), db.labels.end(), label_less);
    return db;
  } catch (const json::exception& e) {
    bad_layout(e.what());
  }
}

std::string to_canonical_json(const LayoutDb& db) { return layout_to_json(db).dump(2) + "\n"; }

LayoutDb parse_layout_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    bad_layout(std::string("invalid JSON: ") + e.what());
  }
  return layout_from_json(doc);
}

namespace {

const char* layer_color(int index) {
  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};
  return kPalette[static_cast<std::size_t>(index) % std::size(kPalette)];
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::string to_svg(const LayoutDb& db, const Technology& tech, const SvgOptions& options) {
  Box extent{0, 0, 1, 1};
  bool first = true;
  auto grow = [&](int x0, int y0, int x1, int y1) {
    if (first) {
      extent = {x0, y0, x1, y1};
      first = false;
      return;
    }
    extent.x0 = std::min(extent.x0, x0);
    extent.y0 = std::min(extent.y0, y0);
    extent.x1 = std::max(extent.x1, x1);
    extent.y1 = std::max(extent.y1, y1);
  };
  for (const auto& [_, inst] : db.instances) {
    const Box b = bbox(inst, tech);
    grow(b.x0, b.y0, b.x1, b.y1);
  }
  for (const auto& w : db.wires) {
    const Layer* l = tech.find_layer(w.layer);
    if (!l) continue;
    const Point a = l->point(w.track, w.span.lo);
    const Point b = l->point(w.track, w.span.hi);
    grow(a.x, a.y, b.x, b.y);
  }
  for (const auto& v : db.vias) grow(v.at.x, v.at.y, v.at.x, v.at.y);
  for (const auto& l : db.labels) grow(l.at.x, l.at.y, l.at.x, l.at.y);

  const double s = options.scale;
  const int margin = 2;
  const int gx0 = extent.x0 - margin;
  const int gy1 = extent.y1 + margin;
  const double width = (extent.x1 - extent.x0 + 2 * margin) * s;
  const double height = (extent.y1 - extent.y0 + 2 * margin) * s;
  auto sx = [&](double x) { return num((x - gx0) * s); };
  auto sy = [&](double y) { return num((gy1 - y) * s); };

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << num(width)
     << "\" height=\"" << num(height) << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height)
     << "\">\n";
  os << "<title>" << xml_escape(db.cell_name) << "</title>\n";

  os << "<g id=\"instances\" fill=\"none\" stroke=\"#555555\" stroke-width=\"1\">\n";
  for (const auto& [name, inst] : db.instances) {
    const Box b = bbox(inst, tech);
    os << "  <rect class=\"instance\" data-name=\"" << xml_escape(name) << "\" x=\"" << sx(b.x0)
       << "\" y=\"" << sy(b.y1) << "\" width=\"" << num((b.x1 - b.x0) * s) << "\" height=\""
       << num((b.y1 - b.y0) * s) << "\"/>\n";
    os << "  <text class=\"instance-name\" x=\"" << sx(b.x0 + 0.2) << "\" y=\"" << sy(b.y1 - 0.6)
       << "\" font-size=\"" << num(s * 0.5) << "\" fill=\"#555555\" stroke=\"none\">"
       << xml_escape(name) << "</text>\n";
  }
  os << "</g>\n";

  const double half = 0.2;
  for (std::size_t li = 0; li < tech.layers.size(); ++li) {
    const Layer& layer = tech.layers[li];
    os << "<g id=\"layer-" << xml_escape(layer.name) << "\" fill=\"" << layer_color(static_cast<int>(li))
       << "\" fill-opacity=\"0.6\">\n";
    if (!options.hide_layers.count(layer.name)) {
      for (const auto& w : db.wires) {
        if (w.layer != layer.name) continue;
        const Point a = layer.point(w.track, w.span.lo);
        const Point b = layer.point(w.track, w.span.hi);
        os << "  <rect class=\"wire\" data-net=\"" << xml_escape(w.net) << "\" x=\"" << sx(a.x - half)
           << "\" y=\"" << sy(b.y + half) << "\" width=\"" << num((b.x - a.x + 2 * half) * s)
           << "\" height=\"" << num((b.y - a.y + 2 * half) * s) << "\"/>\n";
      }
      for (const auto& l : db.labels) {
        if (l.layer != layer.name) continue;
        os << "  <text class=\"label\" x=\"" << sx(l.at.x) << "\" y=\"" << sy(l.at.y)
           << "\" font-size=\"" << num(s * 0.6) << "\" fill=\"#000000\">" << xml_escape(l.net)
           << "</text>\n";
      }
    }
    os << "</g>\n";
  }

  os << "<g id=\"vias\" fill=\"#000000\">\n";
  for (const auto& v : db.vias) {
    if (options.hide_layers.count(v.lower) || options.hide_layers.count(v.upper)) continue;
    os << "  <rect class=\"via\" data-net=\"" << xml_escape(v.net) << "\" x=\"" << sx(v.at.x - 0.15)
       << "\" y=\"" << sy(v.at.y + 0.15) << "\" width=\"" << num(0.3 * s) << "\" height=\""
       << num(0.3 * s) << "\"/>\n";
  }
  os << "</g>\n</svg>\n";
  return os.str();
}

}  // namespace gridlay
