#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridlay/llm_bridge.hpp"
#include "gridlay/session.hpp"
#include "gridlay/tech.hpp"
#include "gridlay/verify.hpp"

namespace httplib {
class Server;
}

namespace gridlay {

struct RunOptions {
  std::filesystem::path tech_path;
  std::filesystem::path netlist_path;
  std::filesystem::path script_path;
  std::filesystem::path out_dir;
  bool strict = true;
};

struct RunReport {
  std::string design;
  int commands_executed = 0;
  int drc_violations = 0;
  LvsVerdict lvs_verdict = LvsVerdict::Match;
  long total_wirelength = 0;
  std::vector<std::filesystem::path> artifacts;  // layout.json, layout.svg, report.json
  std::vector<std::string> warnings;
  int exit_code = 0;
};

nlohmann::json to_json(const RunReport& r);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

/// Netlist text -> the top-level block, parsed against the tech's supplies.
Netlist load_top_netlist(std::string_view text, const Technology& tech);

/// Replays a script into a fresh session and writes the artifacts. A failing
/// command throws its Error with `line` added to the detail. DRC violations
/// or an LVS mismatch set a nonzero exit code unless `strict` is off, in
/// which case they are reported as warnings.
RunReport run_script(const RunOptions& options);

/// HTTP front end over in-memory sessions.
class SessionServer {
 public:
  explicit SessionServer(std::shared_ptr<const Technology> tech, std::optional<LlmSetup> llm = std::nullopt,
                         std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~SessionServer();

  SessionServer(const SessionServer&) = delete;
  SessionServer& operator=(const SessionServer&) = delete;

  /// Throws BindError. Port 0 picks a free port; the bound port is returned.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  void stop();

 private:
  struct Slot {
    std::mutex mu;     // guards session
    std::mutex nl_mu;  // one translation in flight per session
    std::unique_ptr<Session> session;
  };

  std::shared_ptr<Slot> find(const std::string& id);
  void install_routes();

  std::shared_ptr<const Technology> tech_;
  std::optional<LlmSetup> llm_;
  std::unique_ptr<httplib::Server> http_;
  std::mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
  long next_id_ = 1;
};

}  // namespace gridlay
