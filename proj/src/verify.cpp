#include "gridlay/verify.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <tuple>

#include "gridlay/error.hpp"

namespace gridlay {

using nlohmann::json;

std::string_view to_string(DrcRule rule) {
  switch (rule) {
    case DrcRule::R1_OFFGRID: return "R1_OFFGRID";
    case DrcRule::R2_DIRECTION: return "R2_DIRECTION";
    case DrcRule::R3_SPACING: return "R3_SPACING";
    case DrcRule::R4_VIA: return "R4_VIA";
    case DrcRule::R5_OVERLAP: return "R5_OVERLAP";
  }
  return "?";
}

std::string_view to_string(LvsVerdict v) { return v == LvsVerdict::Match ? "MATCH" : "MISMATCH"; }

std::vector<DrcViolation> run_drc(const LayoutDb& db, const Technology& tech) {
  std::vector<DrcViolation> out;

  for (const auto& w : db.wires) {
    const Layer* l = tech.find_layer(w.layer);
    if (!l) {
      out.push_back({DrcRule::R2_DIRECTION, w.layer, {}, {}, "net " + w.net + ": layer has no routing direction"});
      continue;
    }
    const Point start = l->point(w.track, w.span.lo);
    if (!l->on_track(w.track))
      out.push_back({DrcRule::R1_OFFGRID, w.layer, start, {},
                     "net " + w.net + ": track " + std::to_string(w.track) + " is off grid"});
    if (w.span.lo > w.span.hi)
      out.push_back({DrcRule::R1_OFFGRID, w.layer, start, {}, "net " + w.net + ": inverted span"});
  }

  std::map<std::pair<std::string, int>, std::vector<const WireSegment*>> by_track;
  for (const auto& w : db.wires) by_track[{w.layer, w.track}].push_back(&w);
  for (const auto& [key, segs] : by_track) {
    const Layer* l = tech.find_layer(key.first);
    if (!l) continue;
    for (std::size_t i = 0; i < segs.size(); ++i)
      for (std::size_t j = i + 1; j < segs.size(); ++j) {
        const WireSegment& a = *segs[i];
        const WireSegment& b = *segs[j];
        if (a.net == b.net || !a.span.overlaps(b.span)) continue;
        const auto [first, second] = std::minmax(a.net, b.net);
        out.push_back({DrcRule::R3_SPACING, key.first,
                       l->point(key.second, std::max(a.span.lo, b.span.lo)),
                       {},
                       "nets " + first + " and " + second + " closer than 1 unit"});
      }
  }

  for (const auto& v : db.vias) {
    const int lo = tech.layer_index(v.lower);
    const int hi = tech.layer_index(v.upper);
    if (lo < 0 || hi < 0 || hi != lo + 1 || !tech.has_via(v.lower, v.upper)) {
      out.push_back({DrcRule::R4_VIA, v.lower, v.at, {}, "no via rule " + v.lower + "/" + v.upper});
      continue;
    }
    const Layer& a = tech.layers[static_cast<std::size_t>(lo)];
    const Layer& b = tech.layers[static_cast<std::size_t>(hi)];
    if (!a.on_track(a.track_of(v.at)) || !b.on_track(b.track_of(v.at)))
      out.push_back({DrcRule::R4_VIA, v.lower, v.at, {}, "via of " + v.net + " off the track grid"});
  }

  std::vector<std::pair<std::string, Box>> boxes;
  for (const auto& [name, inst] : db.instances) {
    if (!tech.find_template(inst.template_name)) {
      out.push_back({DrcRule::R5_OVERLAP, std::nullopt, inst.origin, {name}, "unknown template " + inst.template_name});
      continue;
    }
    boxes.emplace_back(name, bbox(inst, tech));
  }
  for (std::size_t i = 0; i < boxes.size(); ++i)
    for (std::size_t j = i + 1; j < boxes.size(); ++j)
      if (boxes[i].second.overlaps(boxes[j].second))
        out.push_back({DrcRule::R5_OVERLAP, std::nullopt,
                       {std::max(boxes[i].second.x0, boxes[j].second.x0),
                        std::max(boxes[i].second.y0, boxes[j].second.y0)},
                       {boxes[i].first, boxes[j].first},
                       "instance boxes overlap"});

  std::sort(out.begin(), out.end(), [](const DrcViolation& a, const DrcViolation& b) {
    return std::tie(a.rule, a.layer, a.at, a.instances, a.detail) <
           std::tie(b.rule, b.layer, b.at, b.instances, b.detail);
  });
  return out;
}

namespace {

class DisjointSets {
 public:
  int add() {
    parent_.push_back(static_cast<int>(parent_.size()));
    return parent_.back();
  }
  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<int> parent_;
};

}  // namespace

Connectivity extract_connectivity(const LayoutDb& db, const Technology& tech) {
  DisjointSets sets;
  std::map<GridNode, int> node_ids;
  auto node = [&](int layer, Point p) {
    auto [it, inserted] = node_ids.try_emplace(GridNode{layer, p}, 0);
    if (inserted) it->second = sets.add();
    return it->second;
  };

  for (const auto& w : db.wires) {
    const int li = tech.layer_index(w.layer);
    if (li < 0) continue;
    const Layer& l = tech.layers[static_cast<std::size_t>(li)];
    int prev = node(li, l.point(w.track, w.span.lo));
    for (int a = w.span.lo + 1; a <= w.span.hi; ++a) {
      const int cur = node(li, l.point(w.track, a));
      sets.unite(prev, cur);
      prev = cur;
    }
  }
  for (const auto& v : db.vias) {
    const int lo = tech.layer_index(v.lower);
    const int hi = tech.layer_index(v.upper);
    if (lo < 0 || hi < 0) continue;
    sets.unite(node(lo, v.at), node(hi, v.at));
  }

  std::map<std::pair<std::string, std::string>, int> pin_ids;
  for (const auto& [name, inst] : db.instances) {
    if (!tech.find_template(inst.template_name)) continue;
    for (const auto& [pin, _] : inst.pin_nets) {
      const int id = sets.add();
      pin_ids[{name, pin}] = id;
      for (const auto& pp : instance_pin_points(inst, tech, pin)) {
        const int li = tech.layer_index(pp.layer);
        if (li >= 0) sets.unite(id, node(li, pp.at));
      }
    }
  }

  std::map<int, Component> by_root;
  for (const auto& [n, id] : node_ids) by_root[sets.find(id)].nodes.push_back(n);
  for (const auto& [key, id] : pin_ids) {
    Component& c = by_root[sets.find(id)];
    c.pins.push_back(key);
    c.nets.insert(db.instances.at(key.first).pin_nets.at(key.second));
  }

  Connectivity out;
  std::vector<std::pair<int, Component*>> ordered;
  for (auto& [root, comp] : by_root) {
    std::sort(comp.nodes.begin(), comp.nodes.end());
    std::sort(comp.pins.begin(), comp.pins.end());
    ordered.emplace_back(root, &comp);
  }
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    const Component& x = *a.second;
    const Component& y = *b.second;
    if (x.nodes.empty() != y.nodes.empty()) return !x.nodes.empty();
    if (!x.nodes.empty() && x.nodes.front() != y.nodes.front()) return x.nodes.front() < y.nodes.front();
    return x.pins < y.pins;
  });
  for (const auto& [root, comp] : ordered) {
    for (const auto& pin : comp->pins) out.pin_component[pin] = out.components.size();
    out.components.push_back(std::move(*comp));
  }
  return out;
}

LvsReport run_lvs(const LayoutDb& db, const Netlist& netlist, const Technology& tech) {
  for (const auto& [name, inst] : db.instances) {
    const Device* dev = netlist.find_device(name);
    if (!dev || dev->name != name)
      throw Error(ErrorCode::NetlistBindingError, "instance " + name + " is not a device of " + netlist.name,
                  {{"instance", name}});
    for (const auto& [pin, net] : inst.pin_nets) {
      const std::string* expected = dev->net_of(pin);
      if (!expected || *expected != net)
        throw Error(ErrorCode::NetlistBindingError,
                    name + "." + pin + " is bound to " + net + " but the netlist says " +
                        (expected ? *expected : std::string("nothing")),
                    {{"instance", name}, {"pin", pin}, {"net", net}});
    }
  }

  const Connectivity conn = extract_connectivity(db, tech);
  std::map<std::string, std::set<std::size_t>> net_components;
  std::map<std::string, int> pin_count;
  for (const auto& [key, comp] : conn.pin_component) {
    const std::string& net = db.instances.at(key.first).pin_nets.at(key.second);
    net_components[net].insert(comp);
    ++pin_count[net];
  }

  LvsReport report;
  for (const auto& [net, comps] : net_components)
    if (pin_count[net] >= 2 && comps.size() > 1) report.opens.emplace_back(net, static_cast<int>(comps.size()));
  for (const auto& comp : conn.components)
    if (comp.nets.size() >= 2) report.shorts.push_back(comp.nets);
  std::sort(report.shorts.begin(), report.shorts.end());
  for (const auto& net : netlist.nets)
    if (pin_count[net] < 2) report.unresolved.push_back(net);
  report.verdict = report.opens.empty() && report.shorts.empty() ? LvsVerdict::Match : LvsVerdict::Mismatch;
  return report;
}

json to_json(const DrcViolation& v) {
  json j = {{"rule", std::string(to_string(v.rule))}, {"x", v.at.x}, {"y", v.at.y}, {"detail", v.detail}};
  if (v.layer) j["layer"] = *v.layer;
  if (!v.instances.empty()) j["instances"] = v.instances;
  return j;
}

json to_json(const LvsReport& r) {
  json opens = json::array();
  for (const auto& [net, n] : r.opens) opens.push_back({{"net", net}, {"components", n}});
  json shorts = json::array();
  for (const auto& s : r.shorts) shorts.push_back(s);
  return {{"verdict", std::string(to_string(r.verdict))},
          {"opens", opens},
          {"shorts", shorts},
          {"unresolved", r.unresolved}};
}

json verify_report(const LayoutDb& db, const Netlist& netlist, const Technology& tech) {
  json drc = json::array();
  for (const auto& v : run_drc(db, tech)) drc.push_back(to_json(v));
  const Wirelength wl = routed_wirelength(db, netlist.supply_names);
  return {{"drc", drc},
          {"lvs", to_json(run_lvs(db, netlist, tech))},
          {"wirelength", {{"per_net", wl.per_net}, {"total", wl.total}, {"via_count", wl.via_count}}}};
}

}  // namespace gridlay
