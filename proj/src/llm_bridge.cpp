#include "gridlay/llm_bridge.hpp"

#include <cstdlib>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>

#include <httplib.h>

#include "gridlay/error.hpp"
#include "gridlay/strings.hpp"

namespace gridlay {

using nlohmann::json;

BridgeConfig bridge_config_from_json(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::SchemaError, "llm config must be a JSON object");
  BridgeConfig c;
  try {
    c.endpoint_url = doc.value("endpoint_url", c.endpoint_url);
    c.model_id = doc.value("model_id", c.model_id);
    c.api_key_ref = doc.value("api_key_ref", c.api_key_ref);
    c.max_retries = doc.value("max_retries", c.max_retries);
    c.temperature = doc.value("temperature", c.temperature);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("llm config: ") + e.what());
  }
  if (c.max_retries < 1) throw Error(ErrorCode::SchemaError, "llm config: max_retries must be at least 1");
  return c;
}

json to_json(const BridgeConfig& c) {
  return {{"endpoint_url", c.endpoint_url},
          {"model_id", c.model_id},
          {"api_key_ref", c.api_key_ref},
          {"max_retries", c.max_retries},
          {"temperature", c.temperature}};
}

json to_json(const Transcript& t) {
  json turns = json::array();
  for (const auto& turn : t.turns) turns.push_back({{"role", turn.role}, {"content", turn.content}});
  json commands = json::array();
  for (const auto& c : t.extracted_commands) commands.push_back(print_command(c));
  return {{"turns", turns}, {"extracted_commands", commands}, {"attempts", t.attempts}};
}

namespace {

constexpr std::string_view kSystemTurn =
    "You translate circuit layout instructions into commands of a small line-oriented language. "
    "You never write anything except those commands.";

constexpr std::string_view kContract =
    "Respond only with a fenced block of DSL commands, one command per line, for example:\n"
    "```dsl\n"
    "place_rows\n"
    "route net A auto\n"
    "```\n";

std::string tech_summary(const Technology& tech) {
  std::ostringstream os;
  os << "name: " << tech.name << "\n";
  os << "layers (bottom-up):\n";
  for (const auto& l : tech.layers)
    os << "  " << l.name << " " << to_string(l.direction) << " pitch " << l.pitch << " offset " << l.offset
       << "\n";
  os << "vias:";
  for (const auto& v : tech.vias) os << " " << v.lower << "/" << v.upper;
  os << "\ntemplates:\n";
  for (const auto& [name, t] : tech.templates) {
    os << "  " << name << " " << to_string(t.kind) << " " << t.width << "x" << t.height;
    if (!t.pins.empty()) {
      os << " pins";
      for (const auto& [pin, aps] : t.pins) {
        os << " " << pin << "@";
        for (std::size_t i = 0; i < aps.size(); ++i)
          os << (i ? "|" : "") << aps[i].layer << "(" << aps[i].dx << "," << aps[i].dy << ")";
      }
    }
    os << "\n";
  }
  return os.str();
}

std::string rejection_hint(const Error& e) {
  const json& d = e.detail();
  std::string hint = d.contains("hint") ? d["hint"].get<std::string>() : std::string(e.what());
  if (d.contains("line")) hint = "line " + std::to_string(d["line"].get<int>()) + ": " + hint;
  if (d.contains("position")) hint += " (column " + std::to_string(d["position"].get<int>()) + ")";
  return hint;
}

}  // namespace

std::string build_prompt(const Session& session, std::string_view instruction) {
  std::ostringstream os;
  os << "## DSL grammar\n```\n" << dsl_grammar() << "```\n\n";
  os << "## Technology\n" << tech_summary(session.tech()) << "\n";
  os << "## Netlist\n```\n" << print_netlist(session.netlist()) << "```\n\n";
  os << "## Current layout\n" << layout_summary(session) << "\n";
  os << "## Instruction\n" << instruction << "\n\n";
  os << "## Output contract\n" << kContract;
  return os.str();
}

std::optional<std::string> first_fenced_block(std::string_view text) {
  const std::size_t open = text.find("```");
  if (open == std::string_view::npos) return std::nullopt;
  const std::size_t body = text.find('\n', open);
  if (body == std::string_view::npos) return std::nullopt;
  const std::size_t close = text.find("```", body + 1);
  if (close == std::string_view::npos) return std::nullopt;
  return std::string(text.substr(body + 1, close - body - 1));
}

Translation translate(const Session& session, std::string_view instruction, const Transport& transport,
                      const BridgeConfig& config) {
  Translation out;
  Transcript& t = out.transcript;
  t.turns.push_back({"system", std::string(kSystemTurn)});
  t.turns.push_back({"user", build_prompt(session, instruction)});

  std::string last_error;
  while (t.attempts < config.max_retries) {
    ++t.attempts;
    std::string reply;
    try {
      reply = transport(t.turns, config);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(ErrorCode::TransportError, e.what());
    }
    t.turns.push_back({"assistant", reply});

    const std::optional<std::string> block = first_fenced_block(reply);
    if (!block) {
      last_error = "the reply contains no fenced block of DSL commands";
    } else {
      try {
        std::vector<Command> commands;
        for (auto& line : parse_script(*block)) commands.push_back(std::move(line.command));
        if (commands.empty()) {
          last_error = "the fenced block contains no commands";
        } else {
          t.extracted_commands = commands;
          out.commands = std::move(commands);
          return out;
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::SyntaxError) throw;
        last_error = rejection_hint(e);
      }
    }
    if (t.attempts < config.max_retries)
      t.turns.push_back({"user", "Your previous reply was rejected: " + last_error +
                                     ". Reply again with only a fenced block of valid DSL commands."});
  }
  throw Error(ErrorCode::TranslationFailed,
              "no valid commands after " + std::to_string(t.attempts) + " attempts: " + last_error,
              {{"attempts", t.attempts}, {"last_error", last_error}, {"transcript", to_json(t)}});
}

Transport scripted_transport(std::vector<std::string> replies) {
  struct State {
    std::mutex mu;
    std::vector<std::string> replies;
    std::size_t next = 0;
  };
  auto state = std::make_shared<State>();
  state->replies = std::move(replies);
  return [state](const std::vector<ChatTurn>&, const BridgeConfig&) {
    std::lock_guard lock(state->mu);
    if (state->next >= state->replies.size())
      throw Error(ErrorCode::TransportError, "scripted transport has no replies left");
    return state->replies[state->next++];
  };
}

Transport fixture_transport(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string(), {{"path", path.string()}});
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, path.string() + ": " + e.what());
  }
  if (!doc.is_array()) throw Error(ErrorCode::SchemaError, path.string() + ": expected an array of replies");
  std::vector<std::string> replies;
  for (const auto& r : doc) {
    if (!r.is_string()) throw Error(ErrorCode::SchemaError, path.string() + ": replies must be strings");
    replies.push_back(r.get<std::string>());
  }
  return scripted_transport(std::move(replies));
}

Transport http_transport() {
  return [](const std::vector<ChatTurn>& turns, const BridgeConfig& config) -> std::string {
    const std::size_t scheme = config.endpoint_url.find("://");
    if (scheme == std::string::npos)
      throw Error(ErrorCode::TransportError, "endpoint_url needs a scheme: " + config.endpoint_url);
    const std::size_t slash = config.endpoint_url.find('/', scheme + 3);
    const std::string base = config.endpoint_url.substr(0, slash);
    const std::string path = slash == std::string::npos ? "/" : config.endpoint_url.substr(slash);

    json messages = json::array();
    for (const auto& t : turns) messages.push_back({{"role", t.role}, {"content", t.content}});
    const json body = {{"model", config.model_id}, {"messages", messages}, {"temperature", config.temperature}};

    httplib::Headers headers;
    if (const char* key = std::getenv(config.api_key_ref.c_str()); key && *key)
      headers.emplace("Authorization", std::string("Bearer ") + key);

    httplib::Client client(base);
    client.set_read_timeout(120, 0);
    const auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) throw Error(ErrorCode::TransportError, "request failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
      throw Error(ErrorCode::TransportError, "endpoint returned HTTP " + std::to_string(res->status),
                  {{"status", res->status}});
    try {
      const json reply = json::parse(res->body);
      if (reply.contains("choices")) return reply.at("choices").at(0).at("message").at("content").get<std::string>();
      if (reply.contains("content")) return reply.at("content").at(0).at("text").get<std::string>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::TransportError, std::string("unreadable reply: ") + e.what());
    }
    throw Error(ErrorCode::TransportError, "reply has no message content");
  };
}

LlmSetup load_llm_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string(), {{"path", path.string()}});
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, path.string() + ": " + e.what());
  }
  LlmSetup setup;
  json fields = doc;
  std::optional<std::string> fixture;
  if (fields.is_object() && fields.contains("fixture")) {
    fixture = fields["fixture"].get<std::string>();
    fields.erase("fixture");
  }
  setup.config = bridge_config_from_json(fields);
  if (fixture) {
    std::filesystem::path p(*fixture);
    if (p.is_relative()) p = path.parent_path() / p;
    setup.transport = fixture_transport(p);
  } else {
    setup.transport = http_transport();
  }
  return setup;
}

}  // namespace gridlay
