#include "gridlay/route.hpp"

#include <algorithm>
#include <cstdlib>
#include <tuple>

#include "gridlay/error.hpp"

namespace gridlay {

using nlohmann::json;

Occupancy Occupancy::from_layout(const LayoutDb& db, const Technology& tech) {
  Occupancy occ;
  for (const auto& w : db.wires) occ.claim(w.layer, w.track, w.span, w.net);
  for (const auto& v : db.vias) {
    occ.claim_point(tech, v.lower, v.at, v.net);
    occ.claim_point(tech, v.upper, v.at, v.net);
  }
  for (const auto& [name, inst] : db.instances)
    for (const auto& [pin, net] : inst.pin_nets)
      for (const auto& pp : instance_pin_points(inst, tech, pin)) occ.claim_point(tech, pp.layer, pp.at, net);
  return occ;
}

void Occupancy::claim(const std::string& layer, int track, Interval span, const std::string& net) {
  tracks_[{layer, track}].push_back({span, net});
}

void Occupancy::claim_point(const Technology& tech, const std::string& layer, Point p,
                            const std::string& net) {
  const Layer* l = tech.find_layer(layer);
  if (!l) return;
  const int along = l->along(p);
  claim(layer, l->track_of(p), {along, along}, net);
}

std::optional<Claim> Occupancy::conflict(const std::string& layer, int track, Interval span,
                                         std::string_view net) const {
  auto it = tracks_.find({layer, track});
  if (it == tracks_.end()) return std::nullopt;
  for (const auto& c : it->second)
    if (c.net != net && c.span.overlaps(span)) return c;
  return std::nullopt;
}

long RoutePlan::wire_length() const {
  long total = trunk.span.length();
  for (const auto& b : branches) total += b.span.length();
  return total;
}

std::vector<PinRef> net_pins(const LayoutDb& db, std::string_view net) {
  std::vector<PinRef> out;
  for (const auto& [name, inst] : db.instances)
    for (const auto& [pin, n] : inst.pin_nets)
      if (n == net) out.push_back({name, pin, 0});
  return out;
}

namespace {

struct ResolvedPin {
  PinRef ref;
  std::string layer;
  Point at;
};

ResolvedPin resolve(const LayoutDb& db, const Technology& tech, const PinRef& ref) {
  const PlacedInstance* inst = db.find_instance(ref.instance);
  if (!inst)
    throw Error(ErrorCode::UnknownInstance, "unknown instance " + ref.instance,
                {{"instance", ref.instance}});
  auto points = instance_pin_points(*inst, tech, ref.pin);
  if (ref.access < 0 || ref.access >= static_cast<int>(points.size()))
    throw Error(ErrorCode::UnknownPin,
                ref.instance + "." + ref.pin + " has no access point " + std::to_string(ref.access),
                {{"instance", ref.instance}, {"pin", ref.pin}});
  return {ref, points[static_cast<std::size_t>(ref.access)].layer, points[static_cast<std::size_t>(ref.access)].at};
}

// Vias climbing from layer index `from` to `to` at one point.
void stack(const Technology& tech, int from, int to, Point at, const std::string& net,
           std::vector<Via>& out) {
  const int lo = std::min(from, to);
  const int hi = std::max(from, to);
  for (int i = lo; i < hi; ++i) {
    const std::string& lower = tech.layers[static_cast<std::size_t>(i)].name;
    const std::string& upper = tech.layers[static_cast<std::size_t>(i + 1)].name;
    if (!tech.has_via(lower, upper))
      throw Error(ErrorCode::NotPerpendicular, "no via rule between " + lower + " and " + upper,
                  {{"lower", lower}, {"upper", upper}});
    Via v{lower, upper, at, net};
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(std::move(v));
  }
}

[[noreturn]] void conflict_error(const std::string& layer, int track, Interval span,
                                 const Claim& other, const std::string& net) {
  throw Error(ErrorCode::Conflict,
              "net " + net + " conflicts with net " + other.net + " on " + layer + " track " +
                  std::to_string(track) + " [" + std::to_string(span.lo) + "," + std::to_string(span.hi) + "]",
              {{"layer", layer},
               {"track", track},
               {"interval", {span.lo, span.hi}},
               {"other_net", other.net},
               {"other_interval", {other.span.lo, other.span.hi}}});
}

}  // namespace

RoutePlan plan_route(const LayoutDb& db, const Technology& tech, const std::string& net,
                     const std::vector<PinRef>& pins, const std::string& trunk_layer, int track) {
  const int ti = tech.layer_index(trunk_layer);
  if (ti < 0)
    throw Error(ErrorCode::InvalidCommand, "unknown layer " + trunk_layer, {{"layer", trunk_layer}});
  const Layer& trunk = tech.layers[static_cast<std::size_t>(ti)];
  if (!trunk.on_track(track))
    throw Error(ErrorCode::InvalidCommand,
                std::to_string(track) + " is not a track of " + trunk_layer,
                {{"layer", trunk_layer}, {"track", track}});

  std::vector<ResolvedPin> resolved;
  for (const auto& ref : pins) resolved.push_back(resolve(db, tech, ref));

  // Branch layer: an adjacent layer running perpendicular to the trunk,
  // preferring the one nearest the pins.
  std::vector<int> options;
  for (int cand : {ti - 1, ti + 1})
    if (cand >= 0 && cand < static_cast<int>(tech.layers.size()) &&
        tech.layers[static_cast<std::size_t>(cand)].direction != trunk.direction)
      options.push_back(cand);
  if (options.empty())
    throw Error(ErrorCode::NotPerpendicular, trunk_layer + " has no perpendicular neighbour layer",
                {{"layer", trunk_layer}});
  auto distance = [&](int cand) {
    long d = 0;
    for (const auto& p : resolved) d += std::labs(tech.layer_index(p.layer) - cand);
    return d;
  };
  int bi = options.front();
  for (int cand : options)
    if (distance(cand) < distance(bi)) bi = cand;
  const Layer& branch = tech.layers[static_cast<std::size_t>(bi)];

  RoutePlan plan;
  plan.net = net;
  int lo = 0;
  int hi = 0;
  for (std::size_t i = 0; i < resolved.size(); ++i) {
    const int a = trunk.along(resolved[i].at);
    lo = i ? std::min(lo, a) : a;
    hi = i ? std::max(hi, a) : a;
  }
  plan.trunk = {net, trunk.name, track, {lo, hi}};

  for (const auto& p : resolved) {
    const int pi = tech.layer_index(p.layer);
    if (pi == ti && trunk.track_of(p.at) == track) continue;  // already on the trunk
    const Point junction = trunk.point(track, trunk.along(p.at));
    if (!branch.on_track(branch.track_of(p.at)))
      throw Error(ErrorCode::NotPerpendicular,
                  p.ref.instance + "." + p.ref.pin + " is off the " + branch.name + " grid",
                  {{"instance", p.ref.instance}, {"pin", p.ref.pin}});
    stack(tech, pi, bi, p.at, net, plan.vias);
    if (junction != p.at)
      plan.branches.push_back({net, branch.name, branch.track_of(p.at),
                               Interval::spanning(branch.along(p.at), branch.along(junction))});
    stack(tech, bi, ti, junction, net, plan.vias);
  }
  return plan;
}

void check_plan(const RoutePlan& plan, const Occupancy& occupancy, const Technology& tech) {
  auto check = [&](const WireSegment& w) {
    if (auto c = occupancy.conflict(w.layer, w.track, w.span, plan.net))
      conflict_error(w.layer, w.track, w.span, *c, plan.net);
  };
  check(plan.trunk);
  for (const auto& b : plan.branches) check(b);
  for (const auto& v : plan.vias) {
    for (const std::string* layer : {&v.lower, &v.upper}) {
      const Layer& l = tech.layer(*layer);
      const int a = l.along(v.at);
      const int t = l.track_of(v.at);
      if (auto c = occupancy.conflict(*layer, t, {a, a}, plan.net)) conflict_error(*layer, t, {a, a}, *c, plan.net);
    }
  }
}

namespace {

RouteOutcome commit(const LayoutDb& db, RoutePlan plan) {
  std::vector<WireSegment> wires{plan.trunk};
  wires.insert(wires.end(), plan.branches.begin(), plan.branches.end());
  RouteOutcome out{add_geometry(db, wires, plan.vias), std::move(plan), {}};
  return out;
}

void check_pins(const LayoutDb& db, const std::string& net, const std::vector<PinRef>& pins) {
  for (const auto& ref : pins) {
    const PlacedInstance* inst = db.find_instance(ref.instance);
    if (!inst)
      throw Error(ErrorCode::UnknownInstance, "unknown instance " + ref.instance,
                  {{"instance", ref.instance}});
    auto it = inst->pin_nets.find(ref.pin);
    if (it == inst->pin_nets.end())
      throw Error(ErrorCode::UnknownPin, ref.instance + " has no pin " + ref.pin,
                  {{"instance", ref.instance}, {"pin", ref.pin}});
    if (it->second != net)
      throw Error(ErrorCode::PinNetMismatch,
                  ref.instance + "." + ref.pin + " carries " + it->second + ", not " + net,
                  {{"instance", ref.instance}, {"pin", ref.pin}, {"pin_net", it->second}, {"net", net}});
  }
}

std::vector<PinRef> default_pins(const LayoutDb& db, const std::string& net) {
  auto pins = net_pins(db, net);
  if (pins.empty())
    throw Error(ErrorCode::UnknownNet, "no placed pin carries net " + net, {{"net", net}});
  return pins;
}

RouteOutcome nothing_to_route(const LayoutDb& db, const std::string& net) {
  return {db, std::nullopt, {"net " + net + " has fewer than 2 pins; nothing to route"}};
}

}  // namespace

RouteOutcome route_via_track(const LayoutDb& db, const Technology& tech, const std::string& net,
                             const std::string& trunk_layer, int track,
                             std::optional<std::vector<PinRef>> pins) {
  std::vector<PinRef> targets = pins ? std::move(*pins) : default_pins(db, net);
  check_pins(db, net, targets);
  if (targets.size() < 2) return nothing_to_route(db, net);
  RoutePlan plan = plan_route(db, tech, net, targets, trunk_layer, track);
  check_plan(plan, Occupancy::from_layout(db, tech), tech);
  return commit(db, std::move(plan));
}

RouteOutcome route_pins(const LayoutDb& db, const Technology& tech, const std::vector<PinRef>& pins,
                        const std::string& trunk_layer, int track) {
  if (pins.empty()) throw Error(ErrorCode::InvalidCommand, "no pins given");
  const PlacedInstance* first = db.find_instance(pins.front().instance);
  if (!first)
    throw Error(ErrorCode::UnknownInstance, "unknown instance " + pins.front().instance,
                {{"instance", pins.front().instance}});
  auto it = first->pin_nets.find(pins.front().pin);
  if (it == first->pin_nets.end())
    throw Error(ErrorCode::UnknownPin, pins.front().instance + " has no pin " + pins.front().pin,
                {{"instance", pins.front().instance}, {"pin", pins.front().pin}});
  return route_via_track(db, tech, it->second, trunk_layer, track, pins);
}

RouteOutcome auto_route_net(const LayoutDb& db, const Technology& tech, const std::string& net) {
  const std::vector<PinRef> pins = default_pins(db, net);
  if (pins.size() < 2) return nothing_to_route(db, net);

  std::vector<Point> points;
  for (const auto& ref : pins) points.push_back(resolve(db, tech, ref).at);
  const Occupancy occupancy = Occupancy::from_layout(db, tech);

  for (int window = kAutoWindow; window <= kAutoWindowMax; ++window) {
    std::optional<std::tuple<long, int, int>> best_key;
    std::optional<RoutePlan> best;
    for (int li = 0; li < static_cast<int>(tech.layers.size()); ++li) {
      const Layer& layer = tech.layers[static_cast<std::size_t>(li)];
      int lo = layer.track_of(points.front());
      int hi = lo;
      for (const auto& p : points) {
        lo = std::min(lo, layer.track_of(p));
        hi = std::max(hi, layer.track_of(p));
      }
      for (int t = lo - window; t <= hi + window; ++t) {
        if (!layer.on_track(t)) continue;
        RoutePlan plan;
        try {
          plan = plan_route(db, tech, net, pins, layer.name, t);
          check_plan(plan, occupancy, tech);
        } catch (const Error&) {
          continue;
        }
        const std::tuple<long, int, int> key{plan.score(), li, t};
        if (!best_key || key < *best_key) {
          best_key = key;
          best = std::move(plan);
        }
      }
    }
    if (best) return commit(db, std::move(*best));
  }
  throw Error(ErrorCode::Unroutable,
              "no conflict-free trunk for net " + net + " within +/-" + std::to_string(kAutoWindowMax),
              {{"net", net}});
}

LayoutDb unroute_net(const LayoutDb& db, std::string_view net) { return remove_net_geometry(db, net); }

Wirelength routed_wirelength(const LayoutDb& db, const SupplySet& supplies) {
  Wirelength wl;
  for (const auto& w : db.wires) {
    wl.per_net[w.net] += w.span.length();
    if (!supplies.contains(w.net)) wl.total += w.span.length();
  }
  for (const auto& v : db.vias) {
    wl.vias_per_net[v.net] += 1;
    wl.per_net.try_emplace(v.net, 0);
    if (!supplies.contains(v.net)) ++wl.via_count;
  }
  return wl;
}

json to_json(const Wirelength& wl) {
  return {{"per_net", wl.per_net}, {"total", wl.total}, {"via_count", wl.via_count},
          {"vias_per_net", wl.vias_per_net}};
}

}  // namespace gridlay
