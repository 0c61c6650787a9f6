#pragma once

// Shared fixtures for the unit and acceptance binaries.

#include <algorithm>
#include <climits>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridlay/app.hpp"
#include "gridlay/error.hpp"
#include "gridlay/layout.hpp"
#include "gridlay/netlist.hpp"
#include "gridlay/place.hpp"
#include "gridlay/route.hpp"
#include "gridlay/tech.hpp"

namespace testing {

using namespace gridlay;

/// Code of the Error thrown by `f`, or nothing when it returns normally.
template <class F>
std::optional<ErrorCode> error_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

/// Detail of the Error thrown by `f`; null when nothing was thrown.
template <class F>
nlohmann::json error_detail(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.detail();
  }
  return nullptr;
}

inline std::filesystem::path corpus(const std::string& rel) {
  return std::filesystem::path(GRIDLAY_CORPUS_DIR) / rel;
}

inline std::shared_ptr<const Technology> abs3ml() {
  static const auto tech = std::make_shared<const Technology>(load_tech_file(corpus("tech/abs3ml.json")));
  return tech;
}

inline Netlist corpus_netlist(const std::string& file) {
  return load_top_netlist(read_text_file(corpus("netlists/" + file)), *abs3ml());
}

/// Three alternating pitch-1 layers and width-2 unit transistors, plus a
/// one-pin cell PIN (pin P at (0,1) on M1) for hand-built routing cases.
inline Technology small_tech() {
  return load_tech(nlohmann::json::parse(R"({
    "name": "small",
    "layers": [
      {"name": "M1", "direction": "V", "pitch": 1, "offset": 0},
      {"name": "M2", "direction": "H", "pitch": 1, "offset": 0},
      {"name": "M3", "direction": "V", "pitch": 1, "offset": 0}
    ],
    "vias": [{"lower": "M1", "upper": "M2"}, {"lower": "M2", "upper": "M3"}],
    "templates": [
      {"name": "NMOS_UNIT", "kind": "NMOS_UNIT", "width": 2, "height": 4,
       "pins": {"S": [["M1", 0, 1]], "G": [["M1", 1, 2]], "D": [["M1", 2, 3]]}},
      {"name": "PMOS_UNIT", "kind": "PMOS_UNIT", "width": 2, "height": 4,
       "pins": {"S": [["M1", 0, 1]], "G": [["M1", 1, 2]], "D": [["M1", 2, 3]]}},
      {"name": "PIN", "kind": "GATE_CELL", "width": 1, "height": 2, "pins": {"P": [["M1", 0, 1]]}},
      {"name": "U", "kind": "GATE_CELL", "width": 1, "height": 2, "pins": {"A": [["M1", 0, 0]], "Z": [["M1", 1, 2]]}}
    ]
  })"));
}

/// One-pin instance named `name` at (x, y) whose pin P sits at (x, y + 1).
inline LayoutDb with_pin(const LayoutDb& db, const Technology& tech, const std::string& name, int x, int y,
                         const std::string& net) {
  return place_instance(db, tech, PlacedInstance{name, "PIN", {x, y}, Orient::R0, {{"P", net}}});
}

// ---------------------------------------------------------------------------
// Random single-row problems expressed as real gate-level netlists.

struct GateCase {
  std::shared_ptr<const Technology> tech;
  Netlist netlist;
};

/// Cells C1..C3 of widths 1..3 with pins P0..P2 on distinct columns, and a
/// top block of `n` instances wired to `nets` random signal nets. Uses raw
/// engine output so the cases are identical on every standard library.
inline GateCase random_gate_case(std::uint32_t seed, int n, int nets = 6) {
  std::mt19937 rng(seed);
  auto draw = [&](std::uint32_t bound) { return static_cast<int>(rng() % bound); };

  nlohmann::json templates = nlohmann::json::array();
  std::string cells;
  for (int w = 1; w <= 3; ++w) {
    nlohmann::json pins = nlohmann::json::object();
    std::string ports;
    const int pin_count = std::min(w + 1, 3);
    for (int p = 0; p < pin_count; ++p) {
      const std::string pin = "P" + std::to_string(p);
      pins[pin] = nlohmann::json::array({nlohmann::json::array({"M1", p, draw(4)})});
      ports += " " + pin;
    }
    const std::string name = "C" + std::to_string(w);
    templates.push_back({{"name", name}, {"kind", "GATE_CELL"}, {"width", w}, {"height", 4}, {"pins", pins}});
    cells += ".SUBCKT " + name + ports + "\n.ENDS " + name + "\n";
  }
  nlohmann::json doc = {{"name", "rand"},
                        {"layers",
                         {{{"name", "M1"}, {"direction", "V"}, {"pitch", 1}, {"offset", 0}},
                          {{"name", "M2"}, {"direction", "H"}, {"pitch", 1}, {"offset", 0}}}},
                        {"vias", {{{"lower", "M1"}, {"upper", "M2"}}}},
                        {"templates", templates}};
  auto tech = std::make_shared<const Technology>(load_tech(doc));

  std::string top = ".SUBCKT TOP\n";
  for (int i = 0; i < n; ++i) {
    const int w = 1 + draw(3);
    const int pin_count = std::min(w + 1, 3);
    top += "XG" + std::to_string(i);
    for (int p = 0; p < pin_count; ++p) top += " n" + std::to_string(draw(static_cast<std::uint32_t>(nets)));
    top += " C" + std::to_string(w) + "\n";
  }
  top += ".ENDS TOP\n";
  auto blocks = parse_spice(cells + top);
  return {tech, select_top(blocks)};
}

/// HPWL of a gate row computed straight from template geometry.
inline long oracle_row_hpwl(const GateCase& c, const std::vector<std::string>& order) {
  std::map<std::string, std::vector<std::pair<int, int>>> points;
  int x = 0;
  for (const auto& name : order) {
    const Device* dev = c.netlist.find_device(name);
    const Template& t = c.tech->templates.at(dev->model);
    for (const auto& term : dev->terminals) {
      auto it = t.pins.find(term.name);
      if (it == t.pins.end() || c.netlist.is_supply(term.net)) continue;
      points[term.net].emplace_back(x + it->second.front().dx, it->second.front().dy);
    }
    x += t.width;
  }
  long total = 0;
  for (const auto& [net, pts] : points) {
    if (pts.size() < 2) continue;
    int x0 = INT_MAX, x1 = INT_MIN, y0 = INT_MAX, y1 = INT_MIN;
    for (auto [px, py] : pts) {
      x0 = std::min(x0, px);
      x1 = std::max(x1, px);
      y0 = std::min(y0, py);
      y1 = std::max(y1, py);
    }
    total += (x1 - x0) + (y1 - y0);
  }
  return total;
}

struct BruteForce {
  long best = LONG_MAX;
  std::vector<std::string> order;
};

/// Minimum over every order that keeps `left` at the start and `right` at the
/// end; the first minimum in lexicographic order wins.
inline BruteForce brute_force_order(const GateCase& c, const std::vector<std::string>& left = {},
                                    const std::vector<std::string>& right = {}) {
  std::vector<std::string> free;
  for (const auto& d : c.netlist.devices)
    if (std::find(left.begin(), left.end(), d.name) == left.end() &&
        std::find(right.begin(), right.end(), d.name) == right.end())
      free.push_back(d.name);
  std::sort(free.begin(), free.end());
  BruteForce out;
  do {
    std::vector<std::string> order = left;
    order.insert(order.end(), free.begin(), free.end());
    order.insert(order.end(), right.begin(), right.end());
    const long cost = oracle_row_hpwl(c, order);
    if (cost < out.best) {
      out.best = cost;
      out.order = order;
    }
  } while (std::next_permutation(free.begin(), free.end()));
  return out;
}

// ---------------------------------------------------------------------------
// Independent checks over finished layouts.

/// Every grid point claimed by a net: wire points, via ends and pin points.
inline std::map<std::tuple<std::string, int, int>, std::set<std::string>> claimed_points(const LayoutDb& db,
                                                                                           const Technology& tech) {
  std::map<std::tuple<std::string, int, int>, std::set<std::string>> out;
  for (const auto& w : db.wires) {
    const Layer& l = tech.layer(w.layer);
    for (int a = w.span.lo; a <= w.span.hi; ++a) {
      const Point p = l.point(w.track, a);
      out[{w.layer, p.x, p.y}].insert(w.net);
    }
  }
  for (const auto& v : db.vias) {
    out[{v.lower, v.at.x, v.at.y}].insert(v.net);
    out[{v.upper, v.at.x, v.at.y}].insert(v.net);
  }
  for (const auto& [name, inst] : db.instances)
    for (const auto& [pin, net] : inst.pin_nets)
      for (const auto& pp : instance_pin_points(inst, tech, pin)) out[{pp.layer, pp.at.x, pp.at.y}].insert(net);
  return out;
}

/// Connected-component label of every placed pin, by breadth-first search
/// over grid points: neighbouring points of one wire, the two ends of a via,
/// and a pin's access points are joined.
inline std::map<std::pair<std::string, std::string>, int> oracle_pin_components(const LayoutDb& db,
                                                                               const Technology& tech) {
  using Node = std::tuple<std::string, int, int>;
  std::map<Node, std::vector<Node>> adj;
  auto link = [&](const Node& a, const Node& b) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  };
  for (const auto& w : db.wires) {
    const Layer* l = tech.find_layer(w.layer);
    if (!l) continue;
    for (int a = w.span.lo; a <= w.span.hi; ++a) {
      const Point p = l->point(w.track, a);
      adj[{w.layer, p.x, p.y}];
      if (a > w.span.lo) {
        const Point q = l->point(w.track, a - 1);
        link({w.layer, p.x, p.y}, {w.layer, q.x, q.y});
      }
    }
  }
  for (const auto& v : db.vias) link({v.lower, v.at.x, v.at.y}, {v.upper, v.at.x, v.at.y});
  std::map<std::pair<std::string, std::string>, Node> pin_node;
  for (const auto& [name, inst] : db.instances)
    for (const auto& [pin, net] : inst.pin_nets) {
      const Node self{"pin:" + name + "." + pin, 0, 0};
      adj[self];
      for (const auto& pp : instance_pin_points(inst, tech, pin)) link(self, {pp.layer, pp.at.x, pp.at.y});
      pin_node[{name, pin}] = self;
    }
  std::map<Node, int> label;
  int next = 0;
  for (const auto& [start, _] : adj) {
    if (label.count(start)) continue;
    std::vector<Node> queue{start};
    label[start] = next;
    while (!queue.empty()) {
      const Node n = queue.back();
      queue.pop_back();
      for (const auto& m : adj[n])
        if (!label.count(m)) {
          label[m] = next;
          queue.push_back(m);
        }
    }
    ++next;
  }
  std::map<std::pair<std::string, std::string>, int> out;
  for (const auto& [key, node] : pin_node) out[key] = label.at(node);
  return out;
}

/// Whether every pin of `net` lands in one oracle component.
inline bool oracle_net_connected(const LayoutDb& db, const Technology& tech, const std::string& net) {
  std::set<int> comps;
  for (const auto& [key, comp] : oracle_pin_components(db, tech))
    if (db.instances.at(key.first).pin_nets.at(key.second) == net) comps.insert(comp);
  return comps.size() <= 1;
}

/// Points claimed by more than one net.
inline int shared_points(const LayoutDb& db, const Technology& tech) {
  int n = 0;
  for (const auto& [key, nets] : claimed_points(db, tech))
    if (nets.size() > 1) ++n;
  return n;
}

// ---------------------------------------------------------------------------
// Randomized routing scenarios on the small tech.

struct RouteStep {
  std::string net;
  std::optional<std::string> layer;  // unset: auto
  int track = 0;
};

struct RouteScenario {
  LayoutDb db;
  std::vector<std::string> nets;
  std::vector<RouteStep> steps;
};

/// One-pin cells on distinct grid slots wired to a handful of nets, plus a
/// sequence of route requests (half automatic, half on random tracks).
inline RouteScenario random_route_scenario(const Technology& tech, std::uint32_t seed) {
  std::mt19937 rng(seed);
  auto draw = [&](int bound) { return static_cast<int>(rng() % static_cast<std::uint32_t>(bound)); };
  RouteScenario s;
  s.db = empty_layout(tech, "rand");
  const int net_count = 2 + draw(4);
  for (int i = 0; i < net_count; ++i) s.nets.push_back("n" + std::to_string(i));
  std::set<std::pair<int, int>> used;
  const int pins = 3 + draw(8);
  for (int i = 0; i < pins; ++i) {
    const int x = draw(12);
    const int y = 3 * draw(5);
    if (!used.insert({x, y}).second) continue;
    s.db = with_pin(s.db, tech, "I" + std::to_string(i), x, y, s.nets[static_cast<std::size_t>(draw(net_count))]);
  }
  const int steps = 4 + draw(6);
  for (int i = 0; i < steps; ++i) {
    RouteStep st{s.nets[static_cast<std::size_t>(draw(net_count))], std::nullopt, 0};
    if (draw(2)) {
      st.layer = tech.layers[static_cast<std::size_t>(draw(static_cast<int>(tech.layers.size())))].name;
      st.track = draw(18) - 3;
    }
    s.steps.push_back(st);
  }
  return s;
}

}  // namespace testing
