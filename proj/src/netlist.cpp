#include "gridlay/netlist.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_map>

#include "gridlay/error.hpp"
#include "gridlay/strings.hpp"

namespace gridlay {

std::string_view to_string(DeviceKind kind) {
  switch (kind) {
    case DeviceKind::Pmos: return "PMOS";
    case DeviceKind::Nmos: return "NMOS";
    case DeviceKind::Subckt: return "SUBCKT";
  }
  return "?";
}

const std::string* Device::net_of(std::string_view terminal) const {
  for (const auto& t : terminals)
    if (t.name == terminal) return &t.net;
  return nullptr;
}

SupplySet::SupplySet() : SupplySet(std::vector<std::string>{"VDD", "VSS", "VDD!", "VSS!", "GND"}) {}

SupplySet::SupplySet(const std::vector<std::string>& names) {
  for (const auto& n : names) names_.insert(to_upper(n));
}

bool SupplySet::contains(std::string_view net) const { return names_.count(to_upper(net)) > 0; }

const Device* Netlist::find_device(std::string_view device_name) const {
  for (const auto& d : devices)
    if (d.name == device_name) return &d;
  for (const auto& d : devices)
    if (iequals(d.name, device_name)) return &d;
  return nullptr;
}

bool Netlist::is_transistor_level() const {
  return std::all_of(devices.begin(), devices.end(), [](const Device& d) { return d.is_mos(); });
}

std::vector<std::string> Netlist::unresolved_refs() const {
  std::vector<std::string> out;
  for (const auto& d : devices)
    if (!d.resolved) out.push_back(d.name);
  return out;
}

namespace {

struct LogicalLine {
  int number = 0;
  std::string text;
};

std::vector<LogicalLine> join_continuations(std::string_view text) {
  std::vector<LogicalLine> lines;
  int number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(pos, end - pos);
    ++number;
    pos = end + 1;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '*') continue;
    if (auto semi = line.find(';'); semi != std::string_view::npos) line = trim(line.substr(0, semi));
    if (line.empty()) continue;
    if (line.front() == '+') {
      if (lines.empty())
        throw Error(ErrorCode::MalformedDeviceLine,
                    "line " + std::to_string(number) + ": continuation without a preceding line",
                    {{"line", number}});
      lines.back().text += ' ';
      lines.back().text += trim(line.substr(1));
      continue;
    }
    lines.push_back({number, std::string(line)});
  }
  return lines;
}

// "w = 1u" -> "w=1u" so that every parameter is a single token.
std::vector<std::string> tokenize(const std::string& line) {
  std::string packed;
  packed.reserve(line.size());
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '=') {
      while (!packed.empty() && std::isspace(static_cast<unsigned char>(packed.back())))
        packed.pop_back();
      packed += '=';
      while (i + 1 < line.size() && std::isspace(static_cast<unsigned char>(line[i + 1]))) ++i;
    } else {
      packed += line[i];
    }
  }
  return split_ws(packed);
}

std::optional<double> parse_spice_number(std::string_view s) {
  std::string lower = to_lower(s);
  const char* begin = lower.data();
  const char* end = lower.data() + lower.size();
  double value = 0.0;
  // std::from_chars for double is available in libstdc++ 11.
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{}) return std::nullopt;
  std::string_view suffix(ptr, static_cast<std::size_t>(end - ptr));
  static const std::pair<std::string_view, double> kScales[] = {
      {"meg", 1e6}, {"mil", 25.4e-6}, {"t", 1e12}, {"g", 1e9}, {"k", 1e3}, {"m", 1e-3},
      {"u", 1e-6}, {"n", 1e-9},     {"p", 1e-12}, {"f", 1e-15}};
  if (suffix.empty()) return value;
  for (const auto& [prefix, scale] : kScales)
    if (suffix.substr(0, prefix.size()) == prefix) return value * scale;
  return std::nullopt;
}

std::string format_number(double v) {
  if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 1e15) {
    return std::to_string(static_cast<long long>(v));
  }
  char buf[64];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

[[noreturn]] void fail(ErrorCode code, int line, const std::string& what) {
  throw Error(code, "line " + std::to_string(line) + ": " + what, {{"line", line}});
}

// Case-insensitive identifier table that keeps the first spelling seen.
class Spelling {
 public:
  const std::string& canonical(const std::string& name) {
    auto [it, inserted] = table_.emplace(to_upper(name), name);
    return it->second;
  }

 private:
  std::unordered_map<std::string, std::string> table_;
};

struct PendingRef {
  std::size_t netlist = 0;
  std::size_t device = 0;
  int line = 0;
};

}  // namespace

std::vector<Netlist> parse_spice(std::string_view text, const SupplySet& supplies) {
  std::vector<Netlist> out;
  std::vector<PendingRef> refs;

  std::optional<Netlist> open;
  int open_line = 0;
  Spelling nets;
  std::unordered_map<std::string, int> seen_devices;

  auto add_net = [&](const std::string& raw) -> std::string {
    const std::string& name = nets.canonical(raw);
    open->nets.insert(name);
    return name;
  };

  for (const auto& [number, line] : join_continuations(text)) {
    auto tokens = tokenize(line);
    const std::string head = to_upper(tokens.front());

    if (head == ".SUBCKT") {
      if (open)
        fail(ErrorCode::UnterminatedSubckt, open_line,
             ".SUBCKT " + open->name + " is not closed before the next .SUBCKT");
      if (tokens.size() < 2) fail(ErrorCode::MalformedDeviceLine, number, ".SUBCKT without a name");
      open = Netlist{};
      open->name = tokens[1];
      open->supply_names = supplies;
      open_line = number;
      nets = Spelling{};
      seen_devices.clear();
      for (std::size_t i = 2; i < tokens.size(); ++i) {
        if (iequals(tokens[i], "params:") || tokens[i].find('=') != std::string::npos) break;
        open->ports.push_back(add_net(tokens[i]));
      }
      continue;
    }
    if (head == ".ENDS") {
      if (!open) fail(ErrorCode::MalformedDeviceLine, number, ".ENDS without an open .SUBCKT");
      out.push_back(std::move(*open));
      open.reset();
      continue;
    }
    if (head.front() == '.') continue;  // .END, .GLOBAL, .OPTION and friends carry no devices

    if (!open) fail(ErrorCode::MalformedDeviceLine, number, "element outside .SUBCKT: " + tokens.front());

    std::vector<std::string> positional;
    std::map<std::string, double> params;
    for (const auto& tok : tokens) {
      if (auto eq = tok.find('='); eq != std::string::npos) {
        auto value = parse_spice_number(std::string_view(tok).substr(eq + 1));
        if (eq == 0 || !value)
          fail(ErrorCode::MalformedDeviceLine, number, "bad parameter '" + tok + "'");
        params[to_lower(tok.substr(0, eq))] = *value;
      } else {
        if (!params.empty())
          fail(ErrorCode::MalformedDeviceLine, number, "positional token after parameters: " + tok);
        positional.push_back(tok);
      }
    }

    const std::string& name = positional.front();
    if (seen_devices.count(to_upper(name)))
      fail(ErrorCode::DuplicateDeviceName, number, "duplicate device name " + name);

    Device dev;
    dev.name = name;
    const char letter = static_cast<char>(std::toupper(static_cast<unsigned char>(name.front())));
    if (letter == 'M') {
      if (positional.size() != 6)
        fail(ErrorCode::MalformedDeviceLine, number,
             "MOS device " + name + " needs 4 terminals and a model, got " +
                 std::to_string(positional.size() - 1) + " tokens");
      dev.model = positional[5];
      const std::string model = to_lower(dev.model);
      const bool p = model.find("pmos") != std::string::npos;
      const bool n = model.find("nmos") != std::string::npos;
      if (p == n)
        throw Error(ErrorCode::UnknownModel,
                    "line " + std::to_string(number) + ": cannot infer polarity of model " + dev.model,
                    {{"line", number}, {"model", dev.model}});
      dev.kind = p ? DeviceKind::Pmos : DeviceKind::Nmos;
      static const char* kTerms[] = {"D", "G", "S", "B"};
      for (int i = 0; i < 4; ++i) dev.terminals.push_back({kTerms[i], add_net(positional[1 + i])});
    } else if (letter == 'X') {
      if (positional.size() < 2) fail(ErrorCode::MalformedDeviceLine, number, "X instance without subcircuit");
      dev.kind = DeviceKind::Subckt;
      dev.model = positional.back();
      for (std::size_t i = 1; i + 1 < positional.size(); ++i)
        dev.terminals.push_back({std::to_string(i), add_net(positional[i])});
      refs.push_back({out.size(), open->devices.size(), number});
    } else {
      fail(ErrorCode::MalformedDeviceLine, number, "unsupported element " + name);
    }

    double fingers = 1;
    if (auto it = params.find("nf"); it != params.end()) {
      fingers = it->second;
      if (fingers < 1 || fingers != std::floor(fingers))
        fail(ErrorCode::MalformedDeviceLine, number, "nf must be a positive integer");
      params.erase(it);
    }
    dev.params = std::move(params);

    if (fingers == 1) {
      seen_devices[to_upper(name)] = number;
      open->devices.push_back(std::move(dev));
    } else {
      for (int f = 0; f < static_cast<int>(fingers); ++f) {
        Device unit = dev;
        unit.name = name + "_f" + std::to_string(f);
        if (seen_devices.count(to_upper(unit.name)))
          fail(ErrorCode::DuplicateDeviceName, number, "duplicate device name " + unit.name);
        seen_devices[to_upper(unit.name)] = number;
        open->devices.push_back(std::move(unit));
      }
      // Subckt refs were recorded against the first finger only.
      if (dev.kind == DeviceKind::Subckt) {
        refs.pop_back();
        for (int f = 0; f < static_cast<int>(fingers); ++f)
          refs.push_back({out.size(), open->devices.size() - static_cast<std::size_t>(fingers) + f, number});
      }
    }
  }
  if (open)
    fail(ErrorCode::UnterminatedSubckt, open_line, ".SUBCKT " + open->name + " has no .ENDS");

  for (const auto& ref : refs) {
    Device& dev = out[ref.netlist].devices[ref.device];
    auto target = std::find_if(out.begin(), out.end(),
                               [&](const Netlist& n) { return iequals(n.name, dev.model); });
    if (target == out.end()) {
      dev.resolved = false;
      continue;
    }
    if (target->ports.size() != dev.terminals.size())
      fail(ErrorCode::MalformedDeviceLine, ref.line,
           dev.name + " connects " + std::to_string(dev.terminals.size()) + " nets but " +
               target->name + " has " + std::to_string(target->ports.size()) + " ports");
    dev.model = target->name;
    for (std::size_t i = 0; i < dev.terminals.size(); ++i) dev.terminals[i].name = target->ports[i];
  }
  return out;
}

const Netlist& select_top(const std::vector<Netlist>& netlists) {
  if (netlists.empty()) throw Error(ErrorCode::SchemaError, "no .SUBCKT found");
  std::set<std::string> referenced;
  for (const auto& n : netlists)
    for (const auto& d : n.devices)
      if (d.kind == DeviceKind::Subckt) referenced.insert(to_upper(d.model));
  for (auto it = netlists.rbegin(); it != netlists.rend(); ++it)
    if (!referenced.count(to_upper(it->name))) return *it;
  return netlists.back();
}

std::string print_netlist(const Netlist& netlist) {
  std::ostringstream os;
  os << ".SUBCKT " << netlist.name;
  for (const auto& p : netlist.ports) os << ' ' << p;
  os << '\n';
  for (const auto& d : netlist.devices) {
    os << d.name;
    for (const auto& t : d.terminals) os << ' ' << t.net;
    os << ' ' << d.model;
    for (const auto& [k, v] : d.params) os << ' ' << k << '=' << format_number(v);
    os << '\n';
  }
  os << ".ENDS " << netlist.name << '\n';
  return os.str();
}

std::vector<std::string> signal_nets(const Netlist& netlist) {
  std::vector<std::string> out;
  for (const auto& n : netlist.nets)
    if (!netlist.is_supply(n)) out.push_back(n);
  return out;  // std::set keeps them sorted already
}

Pairing complementary_pairs(const Netlist& netlist) {
  if (!netlist.is_transistor_level())
    throw Error(ErrorCode::NotTransistorLevel, netlist.name + " contains subcircuit instances");

  struct Candidate {
    bool shares_drain;
    const Device* p;
    const Device* n;
  };
  std::vector<Candidate> candidates;
  for (const auto& p : netlist.devices) {
    if (p.kind != DeviceKind::Pmos) continue;
    for (const auto& n : netlist.devices) {
      if (n.kind != DeviceKind::Nmos) continue;
      if (*p.net_of("G") != *n.net_of("G")) continue;
      candidates.push_back({*p.net_of("D") == *n.net_of("D"), &p, &n});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.shares_drain != b.shares_drain) return a.shares_drain;
    if (a.p->name != b.p->name) return a.p->name < b.p->name;
    return a.n->name < b.n->name;
  });

  Pairing result;
  std::set<std::string> used;
  for (const auto& c : candidates) {
    if (used.count(c.p->name) || used.count(c.n->name)) continue;
    used.insert(c.p->name);
    used.insert(c.n->name);
    result.pairs.emplace_back(c.p->name, c.n->name);
  }
  std::sort(result.pairs.begin(), result.pairs.end());
  for (const auto& d : netlist.devices)
    if (!used.count(d.name)) result.unpaired.push_back(d.name);
  return result;
}

Netlist flatten_one_level(const Netlist& top, const std::vector<Netlist>& library) {
  Netlist flat;
  flat.name = top.name;
  flat.ports = top.ports;
  flat.supply_names = top.supply_names;
  flat.nets.insert(top.ports.begin(), top.ports.end());

  for (const auto& dev : top.devices) {
    const Netlist* sub = nullptr;
    if (dev.kind == DeviceKind::Subckt)
      for (const auto& n : library)
        if (iequals(n.name, dev.model)) sub = &n;
    if (!sub) {
      flat.devices.push_back(dev);
      for (const auto& t : dev.terminals) flat.nets.insert(t.net);
      continue;
    }
    std::map<std::string, std::string> binding;
    for (std::size_t i = 0; i < sub->ports.size() && i < dev.terminals.size(); ++i)
      binding[sub->ports[i]] = dev.terminals[i].net;
    auto map_net = [&](const std::string& inner) {
      if (auto it = binding.find(inner); it != binding.end()) return it->second;
      if (top.is_supply(inner)) return inner;
      return dev.name + "_" + inner;
    };
    for (const auto& inner : sub->devices) {
      Device copy = inner;
      copy.name = dev.name + "_" + inner.name;
      for (auto& t : copy.terminals) {
        t.net = map_net(t.net);
        flat.nets.insert(t.net);
      }
      flat.devices.push_back(std::move(copy));
    }
  }
  return flat;
}

}  // namespace gridlay
