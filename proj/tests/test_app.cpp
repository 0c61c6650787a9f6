#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <thread>

#include <httplib.h>

#include "gridlay/app.hpp"
#include "support.hpp"

using namespace gridlay;
using testing::error_code;
using testing::error_detail;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("gridlay_app_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RunOptions corpus_run(const std::string& netlist, const std::string& script, const fs::path& out) {
  RunOptions o;
  o.tech_path = testing::corpus("tech/abs3ml.json");
  o.netlist_path = testing::corpus("netlists/" + netlist + ".sp");
  o.script_path = testing::corpus("scripts/" + script + ".dsl");
  o.out_dir = out;
  return o;
}

// A server on an ephemeral port, listening on its own thread.
struct LiveServer {
  SessionServer server;
  int port = 0;
  std::thread thread;

  explicit LiveServer(std::optional<LlmSetup> llm = std::nullopt) : server(testing::abs3ml(), std::move(llm)) {
    port = server.bind("127.0.0.1", 0);
    thread = std::thread([this] { server.listen(); });
    // listen() may not have started accepting yet; the first request retries.
  }
  ~LiveServer() {
    server.stop();
    thread.join();
  }

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_connection_timeout(5, 0);
    return c;
  }
};

httplib::Result post(httplib::Client& c, const std::string& path, const json& body) {
  for (int attempt = 0;; ++attempt) {
    auto res = c.Post(path, body.dump(), "application/json");
    if (res || attempt == 50) return res;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

std::string create(httplib::Client& c, const std::string& netlist) {
  auto res = post(c, "/sessions", {{"netlist_text", testing::read_text_file(testing::corpus("netlists/" + netlist + ".sp"))}});
  REQUIRE(res);
  REQUIRE(res->status == 201);
  return json::parse(res->body)["id"];
}

}  // namespace

TEST_CASE("run_script on the NAND2 corpus script") {
  const fs::path out = scratch("nand2");
  const RunReport r = run_script(corpus_run("nand2", "nand2", out));
  CHECK(r.exit_code == 0);
  CHECK(r.design == "NAND2");
  CHECK(r.drc_violations == 0);
  CHECK(r.lvs_verdict == LvsVerdict::Match);
  CHECK(r.commands_executed == 13);
  CHECK(r.total_wirelength == 24);
  for (const auto& a : r.artifacts) CHECK(fs::exists(a));
  CHECK(testing::read_text_file(out / "layout.json") ==
        testing::read_text_file(testing::corpus("fixtures/nand2_layout.json")));
  const json report = json::parse(testing::read_text_file(out / "report.json"));
  CHECK(report["lvs"]["verdict"] == "MATCH");
  CHECK(report["run"]["design"] == "NAND2");
  CHECK(to_json(r)["artifacts"] == json::array({"layout.json", "layout.svg", "report.json"}));
}

TEST_CASE("a failing script line is reported with its number") {
  const fs::path out = scratch("syntax");
  const fs::path script = out / "bad.dsl";
  write_text_file(script,
                  "# line 1\nplace_rows\nroute net A auto\n\nroute net B auto\n# line 6\nroute net ZN trunk M2 trak 7\n");
  RunOptions o = corpus_run("nand2", "nand2", out / "artifacts");
  o.script_path = script;
  const auto d = error_detail([&] { run_script(o); });
  CHECK(d["line"] == 7);
  CHECK(d["hint"] == "expected \"track\"");
  CHECK_FALSE(fs::exists(out / "artifacts" / "layout.json"));

  write_text_file(script, "place_rows\nroute net A auto\nroute net ZN trunk M1 track 6\n");
  const auto d2 = error_detail([&] { run_script(o); });
  CHECK(d2["line"] == 3);
  CHECK(error_code([&] { run_script(o); }) == ErrorCode::Conflict);

  o.netlist_path = out / "missing.sp";
  CHECK(error_code([&] { run_script(o); }) == ErrorCode::IoError);
}

TEST_CASE("strict mode turns an open net into a nonzero exit") {
  const fs::path out = scratch("strict");
  const fs::path script = out / "partial.dsl";
  RunOptions o = corpus_run("nand2", "nand2", out);
  o.script_path = script;
  // Moving a pin out from under its route opens the net.
  write_text_file(script, "place_rows\nroute net n1 auto\nmove MN1 to (-2, 0)\n");
  const RunReport strict = run_script(o);
  CHECK(strict.exit_code == 1);
  CHECK(strict.lvs_verdict == LvsVerdict::Mismatch);
  o.strict = false;
  const RunReport lenient = run_script(o);
  CHECK(lenient.exit_code == 0);
  CHECK(lenient.warnings == std::vector<std::string>{"LVS mismatch"});
}

TEST_CASE("optimized D-FF routes with strictly less wire") {
  const RunReport opt = run_script(corpus_run("dff_reset", "dff_reset", scratch("dff_opt")));
  const RunReport base = run_script(corpus_run("dff_reset", "dff_reset_netlist_order", scratch("dff_base")));
  CHECK(opt.exit_code == 0);
  CHECK(base.exit_code == 0);
  CHECK(opt.total_wirelength < base.total_wirelength);
}

TEST_CASE("re-running a corpus script gives byte-identical layout.json") {
  for (const char* design : {"nand2", "mux2", "strongarm_latch"}) {
    CAPTURE(design);
    const fs::path a = scratch(std::string(design) + "_a"), b = scratch(std::string(design) + "_b");
    run_script(corpus_run(design, design, a));
    run_script(corpus_run(design, design, b));
    CHECK(testing::read_text_file(a / "layout.json") == testing::read_text_file(b / "layout.json"));
    CHECK(testing::read_text_file(a / "layout.svg") == testing::read_text_file(b / "layout.svg"));
  }
}

TEST_CASE("HTTP: create, command, read back") {
  LiveServer live;
  auto c = live.client();
  const std::string id = create(c, "nand2");

  auto res = post(c, "/sessions/" + id + "/commands", {{"text", "place MN0 at (0, 0)"}});
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(json::parse(res->body)["events"][0]["type"] == "diff");

  auto layout = c.Get("/sessions/" + id + "/layout");
  REQUIRE(layout);
  CHECK(layout->status == 200);
  CHECK(json::parse(layout->body)["instances"][0]["name"] == "MN0");

  auto svg = c.Get("/sessions/" + id + "/svg");
  REQUIRE(svg);
  CHECK(svg->get_header_value("Content-Type") == "image/svg+xml");
  CHECK(svg->body.find("class=\"instance\"") != std::string::npos);

  auto report = c.Get("/sessions/" + id + "/report");
  REQUIRE(report);
  CHECK(json::parse(report->body).contains("lvs"));
}

TEST_CASE("HTTP: error statuses") {
  LiveServer live;
  auto c = live.client();
  const std::string id = create(c, "nand2");

  auto bad = post(c, "/sessions/" + id + "/commands", {{"text", "route net ZN trunk M2 trak 4"}});
  REQUIRE(bad);
  CHECK(bad->status == 422);
  const json err = json::parse(bad->body);
  CHECK(err["error"] == "SyntaxError");
  CHECK(err["detail"]["hint"] == "expected \"track\"");

  auto missing = c.Get("/sessions/nope/layout");
  REQUIRE(missing);
  CHECK(missing->status == 404);

  post(c, "/sessions/" + id + "/commands", {{"text", "place_rows\nroute net A auto"}});
  auto conflict = post(c, "/sessions/" + id + "/commands", {{"text", "route net ZN trunk M1 track 6"}});
  REQUIRE(conflict);
  CHECK(conflict->status == 409);
  CHECK(json::parse(conflict->body)["error"] == "Conflict");

  auto no_llm = post(c, "/sessions/" + id + "/nl", {{"instruction", "swap"}});
  REQUIRE(no_llm);
  CHECK(no_llm->status == 503);

  auto not_json = c.Post("/sessions", "{", "application/json");
  REQUIRE(not_json);
  CHECK(not_json->status == 422);
  auto bad_netlist = post(c, "/sessions", {{"netlist_text", ".SUBCKT X a\nM1 a b\n"}});
  REQUIRE(bad_netlist);
  CHECK(bad_netlist->status == 422);
}

TEST_CASE("HTTP: a batch commits all or nothing") {
  LiveServer live;
  auto c = live.client();
  const std::string id = create(c, "nand2");
  const std::string before = c.Get("/sessions/" + id + "/layout")->body;
  auto res = post(c, "/sessions/" + id + "/apply", {{"commands", {"place_rows", "route net A auto", "move MN0 to (0, 0)"}}});
  REQUIRE(res);
  CHECK(res->status == 409);
  const json err = json::parse(res->body);
  CHECK(err["detail"]["command_index"] == 2);
  CHECK(err["detail"]["command"] == "move MN0 to (0, 0)");
  CHECK(c.Get("/sessions/" + id + "/layout")->body == before);
  CHECK(json::parse(c.Get("/sessions/" + id + "/history")->body)["commands"].empty());
}

TEST_CASE("HTTP: nl proposes without applying") {
  LlmSetup llm;
  llm.config.max_retries = 2;
  llm.transport = scripted_transport({"no fence", "```\nplace_rows\nroute net A auto\n```"});
  LiveServer live(std::move(llm));
  auto c = live.client();
  const std::string id = create(c, "nand2");
  const std::string before = c.Get("/sessions/" + id + "/layout")->body;

  auto res = post(c, "/sessions/" + id + "/nl", {{"instruction", "place and route A"}});
  REQUIRE(res);
  CHECK(res->status == 200);
  const json body = json::parse(res->body);
  CHECK(body["proposed_commands"] == json::array({"place_rows", "route net A auto"}));
  CHECK(body["transcript"]["attempts"] == 2);
  CHECK(c.Get("/sessions/" + id + "/layout")->body == before);

  auto applied = post(c, "/sessions/" + id + "/apply", {{"commands", body["proposed_commands"]}});
  REQUIRE(applied);
  CHECK(applied->status == 200);
  CHECK(json::parse(c.Get("/sessions/" + id + "/layout")->body)["instances"].size() == 4);

  // Transport exhausted: every later reply is a transport failure.
  auto failed = post(c, "/sessions/" + id + "/nl", {{"instruction", "again"}});
  REQUIRE(failed);
  CHECK(failed->status == 502);
}

TEST_CASE("HTTP: undo and history, then restore from history") {
  LiveServer live;
  auto c = live.client();
  const std::string id = create(c, "nand2");
  post(c, "/sessions/" + id + "/commands", {{"text", "place_rows\nroute net A auto\nroute net B auto"}});
  auto undo = post(c, "/sessions/" + id + "/undo", json::object());
  REQUIRE(undo);
  CHECK(undo->status == 200);
  const json history = json::parse(c.Get("/sessions/" + id + "/history")->body);
  CHECK(history["commands"] == json::array({"place_rows", "route net A auto"}));

  // Undo until empty, then one more.
  post(c, "/sessions/" + id + "/undo", json::object());
  post(c, "/sessions/" + id + "/undo", json::object());
  auto empty = post(c, "/sessions/" + id + "/undo", json::object());
  REQUIRE(empty);
  CHECK(empty->status == 409);
  CHECK(json::parse(empty->body)["error"] == "NothingToUndo");

  // A new session seeded with the saved log reproduces the saved state.
  auto restored = post(c, "/sessions", {{"netlist_text", history["netlist_text"]}, {"commands", history["commands"]}});
  REQUIRE(restored);
  REQUIRE(restored->status == 201);
  const std::string rid = json::parse(restored->body)["id"];
  Session local(testing::abs3ml(), testing::corpus_netlist("nand2.sp"));
  local.execute("place_rows");
  local.execute("route net A auto");
  CHECK(c.Get("/sessions/" + rid + "/layout")->body == to_canonical_json(local.current()));
}

TEST_CASE("HTTP: parallel clients on separate sessions do not interfere") {
  LiveServer live;
  constexpr int kClients = 6;
  std::vector<std::string> ids;
  {
    auto c = live.client();
    for (int i = 0; i < kClients; ++i) ids.push_back(create(c, i % 2 ? "nor2" : "nand2"));
  }
  std::atomic<int> failures{0};
  std::vector<std::thread> threads;
  for (int i = 0; i < kClients; ++i) {
    threads.emplace_back([&, i] {
      auto c = live.client();
      const std::string design = i % 2 ? "nor2" : "nand2";
      const std::string script = testing::read_text_file(testing::corpus("scripts/" + design + ".dsl"));
      for (int round = 0; round < 3; ++round) {
        auto r = c.Post("/sessions/" + ids[i] + "/commands", json{{"text", script}}.dump(), "application/json");
        if (!r || r->status != 200) ++failures;
        for (int k = 0; k < 13; ++k) c.Post("/sessions/" + ids[i] + "/undo", "{}", "application/json");
      }
      c.Post("/sessions/" + ids[i] + "/commands", json{{"text", script}}.dump(), "application/json");
    });
  }
  for (auto& t : threads) t.join();
  CHECK(failures == 0);

  auto c = live.client();
  for (int i = 0; i < kClients; ++i) {
    const std::string design = i % 2 ? "nor2" : "nand2";
    Session expected(testing::abs3ml(), testing::corpus_netlist(design + ".sp"));
    for (const auto& line : parse_script(testing::read_text_file(testing::corpus("scripts/" + design + ".dsl"))))
      expected.apply(line.command);
    CHECK(c.Get("/sessions/" + ids[i] + "/layout")->body == to_canonical_json(expected.current()));
  }
}

TEST_CASE("server bind errors") {
  SessionServer a(testing::abs3ml());
  const int port = a.bind("127.0.0.1", 0);
  SessionServer b(testing::abs3ml());
  CHECK(error_code([&] { b.bind("127.0.0.1", port); }) == ErrorCode::BindError);
}

TEST_CASE("CLI smoke") {
  const std::string cli = GRIDLAY_CLI;
  const fs::path out = scratch("cli");
  const std::string tech = testing::corpus("tech/abs3ml.json").string();
  auto sh = [](const std::string& cmd) {
    const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  CHECK(sh(cli + " check --tech " + tech) == 0);
  CHECK(sh(cli + " run --tech " + tech + " --netlist " + testing::corpus("netlists/nand2.sp").string() +
           " --script " + testing::corpus("scripts/nand2.dsl").string() + " --out " + out.string()) == 0);
  CHECK(fs::exists(out / "layout.json"));
  CHECK(sh(cli + " render --layout " + (out / "layout.json").string() + " --out " + (out / "again.svg").string()) == 0);
  CHECK(testing::read_text_file(out / "again.svg") == testing::read_text_file(out / "layout.svg"));

  write_text_file(out / "bad.dsl", "place_rows\nroute net A autoo\n");
  CHECK(sh(cli + " run --tech " + tech + " --netlist " + testing::corpus("netlists/nand2.sp").string() +
           " --script " + (out / "bad.dsl").string() + " --out " + out.string()) == 2);
  CHECK(sh(cli + " check --tech /nonexistent.json") == 3);
  CHECK(sh(cli + " bogus") != 0);
  CHECK(sh("printf 'place_rows\\nreport lvs\\n' | " + cli + " shell --tech " + tech + " --netlist " +
           testing::corpus("netlists/nand2.sp").string()) == 0);
}
