#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gridlay {

enum class DeviceKind { Pmos, Nmos, Subckt };

std::string_view to_string(DeviceKind kind);

struct Terminal {
  std::string name;
  std::string net;

  bool operator==(const Terminal&) const = default;
};

struct Device {
  std::string name;
  DeviceKind kind = DeviceKind::Nmos;
  // MOS model name, or the referenced subcircuit for SUBCKT devices.
  std::string model;
  std::vector<Terminal> terminals;
  std::map<std::string, double> params;
  // False for an X instance whose subcircuit is not defined in the same text.
  bool resolved = true;

  bool is_mos() const { return kind != DeviceKind::Subckt; }
  const std::string* net_of(std::string_view terminal) const;

  bool operator==(const Device&) const = default;
};

/// Supply net names, stored upper-case; membership tests are case-insensitive.
class SupplySet {
 public:
  SupplySet();  // VDD, VSS, VDD!, VSS!, GND
  explicit SupplySet(const std::vector<std::string>& names);

  bool contains(std::string_view net) const;
  const std::set<std::string>& names() const { return names_; }

  bool operator==(const SupplySet&) const = default;

 private:
  std::set<std::string> names_;
};

struct Netlist {
  std::string name;
  std::vector<std::string> ports;
  std::vector<Device> devices;
  std::set<std::string> nets;
  SupplySet supply_names;

  const Device* find_device(std::string_view name) const;
  bool is_supply(std::string_view net) const { return supply_names.contains(net); }
  bool is_transistor_level() const;
  std::vector<std::string> unresolved_refs() const;

  bool operator==(const Netlist&) const = default;
};

/// Parses the SPICE subset: `*` comments, `+` continuations, `.SUBCKT`/`.ENDS`,
/// `M` and `X` element lines. Returns one Netlist per subcircuit in file order.
/// Multi-finger devices (`nf=k`) are expanded into k unit devices `<name>_f<i>`.
std::vector<Netlist> parse_spice(std::string_view text, const SupplySet& supplies = SupplySet{});

/// The subcircuit not instantiated by any other block; the last such block
/// when several qualify.
const Netlist& select_top(const std::vector<Netlist>& netlists);

/// Canonical text form: upper-case keywords, one device per line.
std::string print_netlist(const Netlist& netlist);

/// Nets minus supplies, sorted.
std::vector<std::string> signal_nets(const Netlist& netlist);

struct Pairing {
  std::vector<std::pair<std::string, std::string>> pairs;  // (pmos, nmos)
  std::vector<std::string> unpaired;

  bool operator==(const Pairing&) const = default;
};

/// Greedy PMOS/NMOS pairing on shared gate nets. Candidate pairs that also
/// share a drain net go first, then lexicographic (pmos, nmos) name order.
Pairing complementary_pairs(const Netlist& netlist);

/// Replaces every X instance whose subcircuit is in `library` with that
/// subcircuit's devices. Inner device and net names are prefixed with
/// `<instance>_`; ports bind to the instance's nets. One level only.
Netlist flatten_one_level(const Netlist& top, const std::vector<Netlist>& library);

}  // namespace gridlay
