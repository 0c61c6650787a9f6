#include "gridlay/session.hpp"

#include <algorithm>
#include <sstream>

#include "gridlay/error.hpp"
#include "gridlay/route.hpp"
#include "gridlay/verify.hpp"

namespace gridlay {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

json instance_json(const PlacedInstance& inst) {
  return {{"name", inst.name},
          {"template", inst.template_name},
          {"origin", {inst.origin.x, inst.origin.y}},
          {"orient", std::string(to_string(inst.orient))}};
}

json wire_json(const WireSegment& w) {
  return {{"net", w.net}, {"layer", w.layer}, {"track", w.track}, {"span", {w.span.lo, w.span.hi}}};
}

json via_json(const Via& v) {
  return {{"layers", {v.lower, v.upper}}, {"x", v.at.x}, {"y", v.at.y}, {"net", v.net}};
}

template <class T, class Less, class ToJson>
void set_difference_json(const std::vector<T>& a, const std::vector<T>& b, Less less, ToJson conv,
                         json& out) {
  std::vector<T> sa = a, sb = b;
  std::sort(sa.begin(), sa.end(), less);
  std::sort(sb.begin(), sb.end(), less);
  std::vector<T> diff;
  std::set_difference(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(diff), less);
  for (const auto& x : diff) out.push_back(conv(x));
}

json event(std::string type, json payload = json::object()) {
  payload["type"] = std::move(type);
  return payload;
}

void fail_unknown_instance(const Netlist& netlist, const std::string& name) {
  throw Error(ErrorCode::UnknownInstance, name + " is not a device of " + netlist.name, {{"instance", name}});
}

}  // namespace

json layout_diff(const LayoutDb& before, const LayoutDb& after) {
  json added = json::array(), removed = json::array(), moved = json::array();
  for (const auto& [name, inst] : after.instances) {
    const PlacedInstance* old = before.find_instance(name);
    if (!old)
      added.push_back(instance_json(inst));
    else if (old->origin != inst.origin || old->orient != inst.orient || old->template_name != inst.template_name)
      moved.push_back(instance_json(inst));
  }
  for (const auto& [name, inst] : before.instances)
    if (!after.find_instance(name)) removed.push_back(name);

  json wires_added = json::array(), wires_removed = json::array();
  set_difference_json(after.wires, before.wires, wire_less, wire_json, wires_added);
  set_difference_json(before.wires, after.wires, wire_less, wire_json, wires_removed);
  json vias_added = json::array(), vias_removed = json::array();
  set_difference_json(after.vias, before.vias, via_less, via_json, vias_added);
  set_difference_json(before.vias, after.vias, via_less, via_json, vias_removed);

  return {{"instances_placed", added},   {"instances_moved", moved},     {"instances_removed", removed},
          {"segments_added", wires_added}, {"segments_removed", wires_removed},
          {"vias_added", vias_added},     {"vias_removed", vias_removed}};
}

Session::Session(std::shared_ptr<const Technology> tech, Netlist netlist)
    : tech_(std::move(tech)), netlist_(std::move(netlist)) {
  state_.db = empty_layout(*tech_, netlist_.name);
}

Session::State Session::run(const Command& cmd, json& events) const {
  const Technology& tech = *tech_;
  State next = state_;

  auto place_row_in = [&](const std::vector<std::string>& order) {
    next.db = place_gate_row(netlist_, tech, order);
    next.db.labels = state_.db.labels;
  };

  auto record_route = [&](const RouteOutcome& r) {
    for (const auto& w : r.warnings) events.push_back(event("warning", {{"message", w}}));
    if (r.plan)
      events.push_back(event("routed", {{"net", r.plan->net},
                                        {"wire_length", r.plan->wire_length()},
                                        {"vias", r.plan->vias.size()},
                                        {"trunk", wire_json(r.plan->trunk)}}));
    next.db = r.db;
  };

  std::visit(
      overloaded{
          [&](const PlaceCmd& c) {
            const Device* dev = netlist_.find_device(c.inst);
            if (!dev || dev->name != c.inst) fail_unknown_instance(netlist_, c.inst);
            PlacedInstance inst;
            inst.name = dev->name;
            inst.origin = c.at;
            inst.orient = c.orient;
            const Template* tmpl = c.template_name ? tech.find_template(*c.template_name) : tech.template_for(*dev);
            if (!tmpl) {
              const std::string wanted = c.template_name ? *c.template_name : dev->model;
              throw Error(ErrorCode::UnknownTemplate, "no template " + wanted + " in " + tech.name,
                          {{"template", wanted}});
            }
            inst.template_name = tmpl->name;
            inst.pin_nets = device_pin_nets(*dev, *tmpl);
            next.db = place_instance(state_.db, tech, std::move(inst));
          },
          [&](const PlaceRowsCmd&) {
            TransistorPlacement tp = place_transistor_rows(netlist_, tech, state_.row_constraints);
            if (!state_.db.instances.empty() || !state_.db.wires.empty())
              events.push_back(event("warning", {{"message", "place_rows replaced the existing layout"}}));
            json pairs = json::array();
            for (const auto& [p, n] : tp.pairing.pairs) pairs.push_back({p, n});
            events.push_back(event("pairing", {{"pairs", pairs}, {"unpaired", tp.pairing.unpaired}}));
            events.push_back(event("order_result", to_json(tp.pair_order)));
            next.db = std::move(tp.db);
            next.db.labels = state_.db.labels;
          },
          [&](const PlaceRowCmd& c) {
            std::vector<std::string> order = c.order;
            if (order.empty()) {
              if (state_.last_order) {
                order = state_.last_order->order;
              } else {
                for (const auto& d : netlist_.devices) order.push_back(d.name);
              }
            }
            if (!state_.db.instances.empty() || !state_.db.wires.empty())
              events.push_back(event("warning", {{"message", "place_row replaced the existing layout"}}));
            place_row_in(order);
          },
          [&](const OptimizeOrderCmd& c) {
            PlacementConstraints pc;
            for (const auto& [name, side] : c.fixes)
              (side == Side::Left ? pc.fixed_left : pc.fixed_right).push_back(name);
            OrderResult r = netlist_.is_transistor_level()
                                ? place_transistor_rows(netlist_, tech, pc).pair_order
                                : optimize_order(netlist_, tech, pc);
            events.push_back(event("order_result", to_json(r)));
            next.row_constraints = std::move(pc);
            next.last_order = netlist_.is_transistor_level() ? std::nullopt : std::optional(std::move(r));
          },
          [&](const MoveCmd& c) { next.db = move_instance(state_.db, tech, c.inst, c.to); },
          [&](const SwapCmd& c) { next.db = swap_instances(state_.db, tech, c.a, c.b); },
          [&](const RouteNetCmd& c) {
            if (c.is_auto())
              record_route(auto_route_net(state_.db, tech, c.net));
            else
              record_route(route_via_track(state_.db, tech, c.net, *c.trunk_layer, c.track));
          },
          [&](const RoutePinsCmd& c) { record_route(route_pins(state_.db, tech, c.pins, c.trunk_layer, c.track)); },
          [&](const UnrouteNetCmd& c) {
            if (!netlist_.nets.contains(c.net))
              throw Error(ErrorCode::UnknownNet, "no net " + c.net + " in " + netlist_.name, {{"net", c.net}});
            next.db = unroute_net(state_.db, c.net);
          },
          [&](const LabelCmd& c) {
            if (!netlist_.nets.contains(c.net))
              throw Error(ErrorCode::UnknownNet, "no net " + c.net + " in " + netlist_.name, {{"net", c.net}});
            const Layer* l = tech.find_layer(c.layer);
            if (!l) throw Error(ErrorCode::InvalidCommand, "unknown layer " + c.layer, {{"layer", c.layer}});
            next.db = add_label(state_.db, Label{c.net, c.layer, c.at});
          },
          [&](const ReportCmd& c) {
            json payload;
            switch (c.kind) {
              case ReportKind::Wirelength:
                payload = to_json(routed_wirelength(state_.db, netlist_.supply_names));
                break;
              case ReportKind::Drc: {
                payload = json::array();
                for (const auto& v : run_drc(state_.db, tech)) payload.push_back(to_json(v));
                break;
              }
              case ReportKind::Lvs:
                payload = to_json(run_lvs(state_.db, netlist_, tech));
                break;
            }
            events.push_back(event("report", {{"kind", std::string(to_string(c.kind))}, {"payload", payload}}));
            next.last_report = json{{"kind", std::string(to_string(c.kind))}, {"payload", payload}};
          },
          [&](const UndoCmd&) {},
          [&](const CheckpointCmd& c) { events.push_back(event("checkpoint", {{"name", c.name}})); },
      },
      cmd);
  return next;
}

json Session::apply(const Command& cmd) {
  json events = json::array();
  if (std::holds_alternative<UndoCmd>(cmd)) {
    const LayoutDb before = state_.db;
    undo();
    json d = layout_diff(before, state_.db);
    events.push_back(event("undone", std::move(d)));
    return events;
  }
  State next = run(cmd, events);
  json d = layout_diff(state_.db, next.db);
  const bool changed = next.db != state_.db;

  history_.push_back({cmd, std::move(state_)});
  state_ = std::move(next);
  if (const auto* cp = std::get_if<CheckpointCmd>(&cmd)) checkpoints_[cp->name] = history_.size();
  if (changed) events.push_back(event("diff", std::move(d)));
  return events;
}

void Session::undo() {
  if (history_.empty()) throw Error(ErrorCode::NothingToUndo, "nothing to undo");
  state_ = std::move(history_.back().before);
  history_.pop_back();
  std::erase_if(checkpoints_, [&](const auto& kv) { return kv.second > history_.size(); });
}

std::vector<Command> Session::command_log() const {
  std::vector<Command> out;
  out.reserve(history_.size());
  for (const auto& e : history_) out.push_back(e.command);
  return out;
}

std::string layout_summary(const Session& session) {
  const LayoutDb& db = session.current();
  std::ostringstream os;
  if (db.instances.empty()) {
    os << "no instances placed\n";
  } else {
    os << "instances:\n";
    for (const auto& [name, inst] : db.instances)
      os << "  " << name << " " << inst.template_name << " at (" << inst.origin.x << ", " << inst.origin.y
         << ") " << to_string(inst.orient) << "\n";
  }
  const Wirelength wl = routed_wirelength(db, session.netlist().supply_names);
  if (wl.per_net.empty()) {
    os << "no nets routed\n";
  } else {
    os << "routed nets:\n";
    for (const auto& [net, len] : wl.per_net) {
      const auto it = wl.vias_per_net.find(net);
      os << "  " << net << " length " << len << " vias " << (it == wl.vias_per_net.end() ? 0 : it->second)
         << "\n";
    }
  }
  if (session.last_report())
    os << "last report: " << session.last_report()->dump() << "\n";
  else
    os << "last report: none\n";
  return os.str();
}

}  // namespace gridlay
