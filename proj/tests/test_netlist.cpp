#include <doctest.h>

#include <random>

#include "support.hpp"

using namespace gridlay;
using testing::corpus;

namespace {

const char* kNand2 = R"(* nand
.SUBCKT NAND2 A B ZN VDD VSS
MP0 ZN A VDD VDD pmos_unit
MP1 ZN B VDD VDD pmos_unit
MN0 ZN A n1 VSS nmos_unit
MN1 n1 B VSS VSS nmos_unit
.ENDS NAND2
)";

ErrorCode code_of(std::string_view text) {
  try {
    parse_spice(text);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::IoError;
}

int line_of(std::string_view text) {
  try {
    parse_spice(text);
  } catch (const Error& e) {
    return e.detail().value("line", -1);
  }
  return -1;
}

}  // namespace

TEST_CASE("NAND2 parses into four devices and four signal nets") {
  const auto blocks = parse_spice(kNand2);
  REQUIRE(blocks.size() == 1);
  const Netlist& n = blocks[0];
  CHECK(n.name == "NAND2");
  CHECK(n.devices.size() == 4);
  CHECK(n.ports == std::vector<std::string>{"A", "B", "ZN", "VDD", "VSS"});
  CHECK(signal_nets(n) == std::vector<std::string>{"A", "B", "ZN", "n1"});
  const Device* mn0 = n.find_device("MN0");
  REQUIRE(mn0);
  CHECK(mn0->kind == DeviceKind::Nmos);
  REQUIRE(mn0->terminals.size() == 4);
  CHECK(mn0->terminals[0] == Terminal{"D", "ZN"});
  CHECK(mn0->terminals[3] == Terminal{"B", "VSS"});
  CHECK(n.find_device("MP1")->kind == DeviceKind::Pmos);
}

TEST_CASE("netlist invariants: terminal nets and ports are all in nets") {
  for (const char* file : {"nand2.sp", "nor2.sp", "level_shifter.sp", "mux2.sp", "strongarm_latch.sp", "dff_reset.sp"}) {
    for (const auto& n : parse_spice(testing::read_text_file(corpus(std::string("netlists/") + file)))) {
      for (const auto& p : n.ports) CHECK(n.nets.count(p));
      for (const auto& d : n.devices) {
        for (const auto& t : d.terminals) CHECK(n.nets.count(t.net));
        if (d.is_mos()) CHECK(d.terminals.size() == 4);
      }
    }
  }
}

TEST_CASE("empty block and supply-only block") {
  const auto blocks = parse_spice(".SUBCKT E VDD VSS\n.ENDS\n");
  REQUIRE(blocks.size() == 1);
  CHECK(blocks[0].devices.empty());
  CHECK(blocks[0].nets.size() == 2);
  CHECK(signal_nets(blocks[0]).empty());
}

TEST_CASE("corpus netlists match the manifest counts") {
  const auto manifest = nlohmann::json::parse(testing::read_text_file(corpus("manifest.json")));
  for (const auto& d : manifest["designs"]) {
    CAPTURE(d["name"].get<std::string>());
    const Netlist n = testing::corpus_netlist(d["netlist"].get<std::string>().substr(9));
    CHECK(n.devices.size() == d["instances"].get<std::size_t>());
    CHECK(signal_nets(n).size() == d["nets"].get<std::size_t>());
  }
}

TEST_CASE("the tech file's supply list extends the defaults") {
  // VDDL only counts as a supply when the tech says so.
  const auto text = testing::read_text_file(corpus("netlists/level_shifter.sp"));
  CHECK(signal_nets(parse_spice(text).back()).size() == 6);
  CHECK(signal_nets(testing::corpus_netlist("level_shifter.sp")).size() == 5);
}

TEST_CASE("parse errors carry line numbers") {
  CHECK(code_of(".SUBCKT A x\nM1 x x x x nmos\n") == ErrorCode::UnterminatedSubckt);
  CHECK(line_of(".SUBCKT A x\nM1 x x x x nmos\n") == 1);
  CHECK(code_of(".SUBCKT A x\n.SUBCKT B y\n.ENDS\n.ENDS\n") == ErrorCode::UnterminatedSubckt);

  const char* malformed = ".SUBCKT A x\n* c\nM1 x x x nmos\n.ENDS\n";
  CHECK(code_of(malformed) == ErrorCode::MalformedDeviceLine);
  CHECK(line_of(malformed) == 3);

  const char* dup = ".SUBCKT A x\nM1 x x x x nmos\nm1 x x x x pmos\n.ENDS\n";
  CHECK(code_of(dup) == ErrorCode::DuplicateDeviceName);
  CHECK(line_of(dup) == 3);

  const char* unknown = ".SUBCKT A x\n\nM1 x x x x res\n.ENDS\n";
  CHECK(code_of(unknown) == ErrorCode::UnknownModel);
  CHECK(line_of(unknown) == 3);

  // Both polarities in one name cannot be resolved either.
  CHECK(code_of(".SUBCKT A x\nM1 x x x x pmos_nmos\n.ENDS\n") == ErrorCode::UnknownModel);
  CHECK(code_of(".SUBCKT A x\nR1 x y 10\n.ENDS\n") == ErrorCode::MalformedDeviceLine);
}

TEST_CASE("continuations, comments and case-insensitive keywords") {
  const auto blocks = parse_spice("* header\n.subckt inv a\n+ z vdd vss\nmp z a vdd vdd PMOS_LVT\n"
                                  "mn z a vss vss NmOs ; trailing\n.ends\n");
  REQUIRE(blocks.size() == 1);
  CHECK(blocks[0].ports == std::vector<std::string>{"a", "z", "vdd", "vss"});
  CHECK(blocks[0].devices.size() == 2);
  CHECK(blocks[0].devices[0].kind == DeviceKind::Pmos);
  CHECK(signal_nets(blocks[0]) == std::vector<std::string>{"a", "z"});
}

TEST_CASE("nf expands into unit fingers") {
  const auto n = parse_spice(".SUBCKT A d g s\nMN d g s s nmos nf=3 w=2\n.ENDS\n")[0];
  REQUIRE(n.devices.size() == 3);
  CHECK(n.devices[0].name == "MN_f0");
  CHECK(n.devices[2].name == "MN_f2");
  CHECK(n.devices[1].params.at("w") == 2);
  CHECK_FALSE(n.devices[1].params.count("nf"));
  CHECK(code_of(".SUBCKT A d g s\nMN d g s s nmos nf=0\n.ENDS\n") == ErrorCode::MalformedDeviceLine);
  CHECK(code_of(".SUBCKT A d g s\nMN d g s s nmos nf=1.5\n.ENDS\n") == ErrorCode::MalformedDeviceLine);
}

TEST_CASE("X instances take their terminal names from the referenced block") {
  const auto blocks = parse_spice(".SUBCKT INV I ZN\n.ENDS\n.SUBCKT TOP a b\nX1 a b inv\nX2 a b MISSING\n.ENDS\n");
  const Netlist& top = select_top(blocks);
  CHECK(top.name == "TOP");
  const Device* x1 = top.find_device("X1");
  CHECK(x1->resolved);
  CHECK(x1->model == "INV");
  CHECK(x1->terminals[0] == Terminal{"I", "a"});
  CHECK_FALSE(top.find_device("X2")->resolved);
  CHECK(top.unresolved_refs() == std::vector<std::string>{"X2"});
  CHECK_FALSE(top.is_transistor_level());

  CHECK(code_of(".SUBCKT INV I ZN\n.ENDS\n.SUBCKT TOP a\nX1 a INV\n.ENDS\n") == ErrorCode::MalformedDeviceLine);
}

TEST_CASE("select_top picks the block nobody instantiates") {
  const auto blocks = testing::corpus_netlist("dff_reset.sp");
  CHECK(blocks.name == "DFF_RN");
  CHECK(blocks.devices.size() == 9);
  // Ties go to the last block.
  const auto two = parse_spice(".SUBCKT A\n.ENDS\n.SUBCKT B\n.ENDS\n");
  CHECK(select_top(two).name == "B");
}

TEST_CASE("printing then re-parsing gives an equal netlist") {
  for (const char* file : {"nand2.sp", "nor2.sp", "level_shifter.sp", "mux2.sp", "strongarm_latch.sp"}) {
    CAPTURE(file);
    const Netlist n = testing::corpus_netlist(file);
    const auto again = parse_spice(print_netlist(n), n.supply_names);
    REQUIRE(again.size() == 1);
    CHECK(again[0] == n);
  }
  // Hierarchical text round-trips as a whole file.
  const auto blocks = parse_spice(testing::read_text_file(corpus("netlists/dff_reset.sp")));
  std::string text;
  for (const auto& b : blocks) text += print_netlist(b);
  CHECK(parse_spice(text) == blocks);
}

TEST_CASE("round trip over generated netlists") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    std::string text = ".SUBCKT R" + std::to_string(trial) + " p0 p1\n";
    const int devices = static_cast<int>(rng() % 6);
    for (int i = 0; i < devices; ++i) {
      text += "M" + std::to_string(i);
      for (int t = 0; t < 4; ++t) text += " n" + std::to_string(rng() % 5);
      text += rng() % 2 ? " pmos" : " nmos";
      if (rng() % 3 == 0) text += " w=" + std::to_string(1 + rng() % 4);
      if (rng() % 4 == 0) text += " nf=" + std::to_string(1 + rng() % 3);
      text += "\n";
    }
    text += ".ENDS\n";
    const Netlist n = parse_spice(text)[0];
    CHECK(parse_spice(print_netlist(n))[0] == n);
  }
}

TEST_CASE("complementary pairing") {
  SUBCASE("NAND2 pairs by gate net") {
    const Pairing p = complementary_pairs(parse_spice(kNand2)[0]);
    CHECK(p.pairs == std::vector<std::pair<std::string, std::string>>{{"MP0", "MN0"}, {"MP1", "MN1"}});
    CHECK(p.unpaired.empty());
  }
  SUBCASE("a lone PMOS stays unpaired") {
    const Pairing p = complementary_pairs(parse_spice(".SUBCKT A\nMP a b c d pmos\n.ENDS\n")[0]);
    CHECK(p.pairs.empty());
    CHECK(p.unpaired == std::vector<std::string>{"MP"});
  }
  SUBCASE("shared drain breaks the tie before names") {
    // MPA is lexicographically first, but MPB shares the NMOS drain.
    const Pairing p = complementary_pairs(
        parse_spice(".SUBCKT A\nMPA x G VDD VDD pmos\nMPB y G VDD VDD pmos\nMN y G VSS VSS nmos\n.ENDS\n")[0]);
    CHECK(p.pairs == std::vector<std::pair<std::string, std::string>>{{"MPB", "MN"}});
    CHECK(p.unpaired == std::vector<std::string>{"MPA"});
  }
  SUBCASE("without a drain tie the smaller name wins") {
    const Pairing p = complementary_pairs(
        parse_spice(".SUBCKT A\nMPB x G VDD VDD pmos\nMPA y G VDD VDD pmos\nMN z G VSS VSS nmos\n.ENDS\n")[0]);
    CHECK(p.pairs == std::vector<std::pair<std::string, std::string>>{{"MPA", "MN"}});
  }
  SUBCASE("gate-level netlists are rejected") {
    CHECK_THROWS_AS(complementary_pairs(testing::corpus_netlist("dff_reset.sp")), Error);
  }
}

TEST_CASE("pairing is a deterministic partial matching") {
  for (const char* file : {"nand2.sp", "nor2.sp", "level_shifter.sp", "mux2.sp", "strongarm_latch.sp"}) {
    const Netlist n = testing::corpus_netlist(file);
    const Pairing p = complementary_pairs(n);
    CHECK(complementary_pairs(n) == p);
    std::set<std::string> seen;
    for (const auto& [a, b] : p.pairs) {
      CHECK(seen.insert(a).second);
      CHECK(seen.insert(b).second);
      CHECK(*n.find_device(a)->net_of("G") == *n.find_device(b)->net_of("G"));
    }
    for (const auto& u : p.unpaired) CHECK(seen.insert(u).second);
    CHECK(seen.size() == n.devices.size());
  }
}

TEST_CASE("level shifter keeps cross-coupled devices unpaired") {
  const Pairing p = complementary_pairs(testing::corpus_netlist("level_shifter.sp"));
  CHECK_FALSE(p.unpaired.empty());
}

TEST_CASE("one-level flattening prefixes inner names") {
  const auto blocks = parse_spice(testing::read_text_file(corpus("netlists/dff_reset.sp")));
  const Netlist flat = flatten_one_level(select_top(blocks), blocks);
  CHECK(flat.is_transistor_level());
  CHECK(flat.find_device("XNAND_M_MP0") != nullptr);
  for (const auto& d : flat.devices)
    for (const auto& t : d.terminals) CHECK(flat.nets.count(t.net));
}
