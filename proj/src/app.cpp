#include "gridlay/app.hpp"

#include <fstream>
#include <sstream>

#include <httplib.h>

#include "gridlay/error.hpp"

namespace gridlay {

using nlohmann::json;

json to_json(const RunReport& r) {
  json artifacts = json::array();
  for (const auto& a : r.artifacts) artifacts.push_back(a.filename().string());
  return {{"design", r.design},
          {"commands_executed", r.commands_executed},
          {"drc_violations", r.drc_violations},
          {"lvs_verdict", std::string(to_string(r.lvs_verdict))},
          {"total_wirelength", r.total_wirelength},
          {"artifacts", artifacts},
          {"warnings", r.warnings}};
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string(), {{"path", path.string()}});
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string(), {{"path", path.string()}});
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string(), {{"path", path.string()}});
}

Netlist load_top_netlist(std::string_view text, const Technology& tech) {
  const std::vector<Netlist> blocks = parse_spice(text, tech.supply_names);
  return select_top(blocks);
}

RunReport run_script(const RunOptions& options) {
  auto tech = std::make_shared<const Technology>(load_tech_file(options.tech_path));
  Session session(tech, load_top_netlist(read_text_file(options.netlist_path), *tech));
  const std::vector<ScriptLine> script = parse_script(read_text_file(options.script_path));

  RunReport report;
  report.design = session.netlist().name;
  for (const auto& [line, cmd] : script) {
    try {
      session.apply(cmd);
    } catch (const Error& e) {
      json detail = e.detail();
      detail["line"] = line;
      throw Error(e.code(), "line " + std::to_string(line) + ": " + e.what(), detail);
    }
    ++report.commands_executed;
  }

  std::error_code ec;
  std::filesystem::create_directories(options.out_dir, ec);
  if (ec)
    throw Error(ErrorCode::IoError, "cannot create " + options.out_dir.string() + ": " + ec.message(),
                {{"path", options.out_dir.string()}});

  const LayoutDb& db = session.current();
  json verify = verify_report(db, session.netlist(), *tech);
  report.drc_violations = static_cast<int>(verify["drc"].size());
  report.lvs_verdict = verify["lvs"]["verdict"] == "MATCH" ? LvsVerdict::Match : LvsVerdict::Mismatch;
  report.total_wirelength = verify["wirelength"]["total"].get<long>();

  const bool clean = report.drc_violations == 0 && report.lvs_verdict == LvsVerdict::Match;
  if (!clean) {
    if (report.drc_violations)
      report.warnings.push_back(std::to_string(report.drc_violations) + " DRC violation(s)");
    if (report.lvs_verdict != LvsVerdict::Match) report.warnings.push_back("LVS mismatch");
    if (options.strict) report.exit_code = 1;
  }

  const auto layout_path = options.out_dir / "layout.json";
  const auto svg_path = options.out_dir / "layout.svg";
  const auto report_path = options.out_dir / "report.json";
  report.artifacts = {layout_path, svg_path, report_path};
  write_text_file(layout_path, to_canonical_json(db));
  write_text_file(svg_path, to_svg(db, *tech));
  verify["run"] = to_json(report);
  write_text_file(report_path, verify.dump(2) + "\n");
  return report;
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(2) + "\n", "application/json");
}

void send_error(httplib::Response& res, int status, const Error& e) { send_json(res, status, e.to_json()); }

json parse_body(const httplib::Request& req) {
  try {
    json body = json::parse(req.body);
    if (!body.is_object()) throw Error(ErrorCode::SchemaError, "request body must be a JSON object");
    return body;
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, std::string("request body is not JSON: ") + e.what());
  }
}

std::string string_field(const json& body, const char* key) {
  if (!body.contains(key) || !body[key].is_string())
    throw Error(ErrorCode::SchemaError, std::string("missing string field \"") + key + "\"", {{"field", key}});
  return body[key].get<std::string>();
}

/// Status for an error raised while handling a request.
int status_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::SyntaxError:
    case ErrorCode::SchemaError:
    case ErrorCode::UnterminatedSubckt:
    case ErrorCode::MalformedDeviceLine:
    case ErrorCode::DuplicateDeviceName:
    case ErrorCode::UnknownModel:
    case ErrorCode::TranslationFailed:
      return 422;
    case ErrorCode::TransportError:
      return 502;
    default:
      return 409;
  }
}

/// Applies all commands to a copy and commits only if every one succeeds.
json apply_all(Session& session, const std::vector<Command>& commands) {
  Session draft = session;
  json events = json::array();
  for (std::size_t i = 0; i < commands.size(); ++i) {
    try {
      for (auto& ev : draft.apply(commands[i])) events.push_back(std::move(ev));
    } catch (const Error& e) {
      json detail = e.detail();
      detail["command_index"] = i;
      detail["command"] = print_command(commands[i]);
      throw Error(e.code(), e.what(), detail);
    }
  }
  session = std::move(draft);
  return events;
}

}  // namespace

SessionServer::SessionServer(std::shared_ptr<const Technology> tech, std::optional<LlmSetup> llm,
                             std::optional<std::filesystem::path> static_dir)
    : tech_(std::move(tech)), llm_(std::move(llm)), http_(std::make_unique<httplib::Server>()) {
  // httplib's default adds SO_REUSEPORT, which lets a second server share a
  // busy port instead of failing to bind.
  http_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  if (static_dir) http_->set_mount_point("/", static_dir->string());
  install_routes();
}

SessionServer::~SessionServer() { stop(); }

int SessionServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? http_->bind_to_any_port(host) : (http_->bind_to_port(host, port) ? port : -1);
  if (bound < 0)
    throw Error(ErrorCode::BindError, "cannot bind " + host + ":" + std::to_string(port), {{"port", port}});
  return bound;
}

void SessionServer::listen() { http_->listen_after_bind(); }

void SessionServer::stop() {
  if (http_) http_->stop();
}

std::shared_ptr<SessionServer::Slot> SessionServer::find(const std::string& id) {
  std::lock_guard lock(sessions_mu_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

void SessionServer::install_routes() {
  // Wraps a per-session handler: resolves the id, maps errors to statuses.
  auto with_slot = [this](auto handler) {
    return [this, handler](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      auto slot = find(id);
      if (!slot) {
        send_json(res, 404, {{"error", "UnknownSession"}, {"message", "no session " + id}, {"detail", {{"id", id}}}});
        return;
      }
      try {
        handler(*slot, req, res);
      } catch (const Error& e) {
        send_error(res, status_for(e), e);
      } catch (const std::exception& e) {
        send_json(res, 500, {{"error", "Internal"}, {"message", e.what()}, {"detail", json::object()}});
      }
    };
  };

  http_->Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      const json body = parse_body(req);
      auto slot = std::make_shared<Slot>();
      slot->session = std::make_unique<Session>(tech_, load_top_netlist(string_field(body, "netlist_text"), *tech_));
      if (body.contains("commands")) {
        std::vector<Command> commands;
        for (const auto& line : body["commands"]) commands.push_back(parse_command(line.get<std::string>()));
        apply_all(*slot->session, commands);
      }
      std::string id;
      {
        std::lock_guard lock(sessions_mu_);
        id = "s" + std::to_string(next_id_++);
        sessions_[id] = slot;
      }
      send_json(res, 201, {{"id", id}, {"design", slot->session->netlist().name}});
    } catch (const Error& e) {
      send_error(res, status_for(e), e);
    } catch (const json::exception& e) {
      send_json(res, 422, {{"error", "SchemaError"}, {"message", e.what()}, {"detail", json::object()}});
    }
  });

  http_->Post(R"(/sessions/([^/]+)/commands)", with_slot([](Slot& slot, const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    std::vector<Command> commands;
    for (auto& line : parse_script(string_field(body, "text"))) commands.push_back(std::move(line.command));
    std::lock_guard lock(slot.mu);
    send_json(res, 200, {{"events", apply_all(*slot.session, commands)}});
  }));

  http_->Post(R"(/sessions/([^/]+)/apply)", with_slot([](Slot& slot, const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    if (!body.contains("commands") || !body["commands"].is_array())
      throw Error(ErrorCode::SchemaError, "missing array field \"commands\"", {{"field", "commands"}});
    std::vector<Command> commands;
    for (const auto& line : body["commands"]) {
      if (!line.is_string()) throw Error(ErrorCode::SchemaError, "commands must be strings");
      commands.push_back(parse_command(line.get<std::string>()));
    }
    std::lock_guard lock(slot.mu);
    send_json(res, 200, {{"events", apply_all(*slot.session, commands)}});
  }));

  http_->Post(R"(/sessions/([^/]+)/nl)", with_slot([this](Slot& slot, const httplib::Request& req, httplib::Response& res) {
    if (!llm_) {
      send_json(res, 503, {{"error", "NoTranslator"}, {"message", "server was started without --llm-config"},
                           {"detail", json::object()}});
      return;
    }
    const json body = parse_body(req);
    const std::string instruction = string_field(body, "instruction");
    std::lock_guard nl_lock(slot.nl_mu);
    std::optional<Session> snapshot;
    {
      std::lock_guard lock(slot.mu);
      snapshot.emplace(*slot.session);
    }
    const Translation t = translate(*snapshot, instruction, llm_->transport, llm_->config);
    json proposed = json::array();
    for (const auto& c : t.commands) proposed.push_back(print_command(c));
    send_json(res, 200, {{"proposed_commands", proposed}, {"transcript", to_json(t.transcript)}});
  }));

  http_->Get(R"(/sessions/([^/]+)/layout)", with_slot([](Slot& slot, const httplib::Request&, httplib::Response& res) {
    std::lock_guard lock(slot.mu);
    res.set_content(to_canonical_json(slot.session->current()), "application/json");
  }));

  http_->Get(R"(/sessions/([^/]+)/svg)", with_slot([](Slot& slot, const httplib::Request&, httplib::Response& res) {
    std::lock_guard lock(slot.mu);
    res.set_content(to_svg(slot.session->current(), slot.session->tech()), "image/svg+xml");
  }));

  http_->Get(R"(/sessions/([^/]+)/report)", with_slot([](Slot& slot, const httplib::Request&, httplib::Response& res) {
    std::lock_guard lock(slot.mu);
    const Session& s = *slot.session;
    send_json(res, 200, verify_report(s.current(), s.netlist(), s.tech()));
  }));

  http_->Post(R"(/sessions/([^/]+)/undo)", with_slot([](Slot& slot, const httplib::Request&, httplib::Response& res) {
    std::lock_guard lock(slot.mu);
    send_json(res, 200, {{"events", slot.session->apply(UndoCmd{})}});
  }));

  http_->Get(R"(/sessions/([^/]+)/history)", with_slot([](Slot& slot, const httplib::Request&, httplib::Response& res) {
    std::lock_guard lock(slot.mu);
    json commands = json::array();
    for (const auto& c : slot.session->command_log()) commands.push_back(print_command(c));
    send_json(res, 200, {{"commands", commands}, {"netlist_text", print_netlist(slot.session->netlist())}});
  }));
}

}  // namespace gridlay
