#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridlay/dsl.hpp"
#include "gridlay/session.hpp"

namespace gridlay {

struct BridgeConfig {
  std::string endpoint_url;
  std::string model_id;
  std::string api_key_ref = "OPENAI_API_KEY";  // name of the environment variable, not the key
  int max_retries = 3;
  double temperature = 0.0;
};

BridgeConfig bridge_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const BridgeConfig& config);

struct ChatTurn {
  std::string role;  // "system", "user" or "assistant"
  std::string content;

  bool operator==(const ChatTurn&) const = default;
};

struct Transcript {
  std::vector<ChatTurn> turns;
  std::vector<Command> extracted_commands;
  int attempts = 0;
};

nlohmann::json to_json(const Transcript& t);

/// Sends the conversation so far and returns the assistant's reply text.
/// Failures are reported as TransportError.
using Transport = std::function<std::string(const std::vector<ChatTurn>&, const BridgeConfig&)>;

std::string build_prompt(const Session& session, std::string_view instruction);

/// Body of the first ``` fenced block, without the info string.
std::optional<std::string> first_fenced_block(std::string_view text);

struct Translation {
  std::vector<Command> commands;
  Transcript transcript;
};

/// Proposes commands for `instruction`; never applies them. Throws
/// TranslationFailed once `config.max_retries` replies have been rejected.
Translation translate(const Session& session, std::string_view instruction, const Transport& transport,
                      const BridgeConfig& config);

/// Replies with the given texts in order, then fails with TransportError.
Transport scripted_transport(std::vector<std::string> replies);

/// Recorded fixture: a JSON array of reply texts.
Transport fixture_transport(const std::filesystem::path& path);

/// Chat-completion POST: `{model, messages, temperature}` with a bearer key
/// read from the environment variable named by `api_key_ref`.
Transport http_transport();

struct LlmSetup {
  BridgeConfig config;
  Transport transport;
};

/// Reads an LLM config file. A `fixture` key selects the recorded transport
/// (resolved relative to the config file); otherwise HTTP is used.
LlmSetup load_llm_config(const std::filesystem::path& path);

}  // namespace gridlay
