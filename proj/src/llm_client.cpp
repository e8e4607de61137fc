#include "fame/llm_client.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "fame/hash.hpp"

namespace fame {

std::unique_ptr<ScriptedMockClient> ScriptedMockClient::parse(std::string_view jsonl) {
  std::vector<Rule> rules;
  std::optional<std::string> fallback;
  std::string model = "mock";
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::kParse, "mock script line " + std::to_string(lineno) + ": " + e.what());
    }
    if (j.contains("model")) model = j.at("model").get<std::string>();
    if (j.contains("default")) {
      fallback = j.at("default").get<std::string>();
      continue;
    }
    if (!j.contains("answer")) {
      if (j.contains("model")) continue;
      throw Error(ErrorCode::kSchema, "mock script line " + std::to_string(lineno) + " has no answer");
    }
    Rule r;
    r.answer = j.at("answer").get<std::string>();
    if (j.contains("contains")) {
      const auto& c = j.at("contains");
      if (c.is_string()) {
        r.contains.push_back(c.get<std::string>());
      } else {
        r.contains = c.get<std::vector<std::string>>();
      }
    }
    if (j.contains("prompt_sha256")) r.prompt_sha256 = j.at("prompt_sha256").get<std::string>();
    rules.push_back(std::move(r));
  }
  return std::make_unique<ScriptedMockClient>(std::move(rules), std::move(fallback), model);
}

std::unique_ptr<ScriptedMockClient> ScriptedMockClient::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open mock script '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string ScriptedMockClient::complete(const LlmRequest& request) {
  count_call();
  std::string sha;
  for (const auto& r : rules_) {
    if (!r.prompt_sha256.empty()) {
      if (sha.empty()) sha = sha256_hex(request.prompt);
      if (sha != r.prompt_sha256) continue;
    }
    bool all = true;
    for (const auto& needle : r.contains) {
      if (request.prompt.find(needle) == std::string::npos) {
        all = false;
        break;
      }
    }
    if (all) return r.answer;
  }
  if (default_) return *default_;
  throw TransportError("mock script has no rule for this prompt");
}

HttpChatClient::HttpChatClient(Config config) : config_(std::move(config)) {
  if (config_.api_key.empty()) {
    if (const char* k = std::getenv("FAME_LLM_API_KEY")) config_.api_key = k;
  }
  const std::string& url = config_.endpoint;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "endpoint must be an http(s) URL: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

std::string HttpChatClient::complete(const LlmRequest& request) {
  count_call();
  httplib::Client cli(scheme_host_port_);
  cli.set_connection_timeout(config_.timeout);
  cli.set_read_timeout(config_.timeout);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
  nlohmann::json body = {
      {"model", config_.model},
      {"temperature", request.temperature},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
  };
  auto res = cli.Post(path_, headers, body.dump(), "application/json");
  if (!res) throw TransportError("request failed: " + httplib::to_string(res.error()));
  if (res->status == 429 || res->status >= 500) {
    throw TransportError("server returned HTTP " + std::to_string(res->status));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::kTransport, "server returned HTTP " + std::to_string(res->status),
                {{"status", res->status}, {"body", res->body.substr(0, 512)}});
  }
  try {
    auto j = nlohmann::json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("malformed completion response: ") + e.what());
  }
}

std::unique_ptr<LlmClient> make_client(std::string_view spec, const std::string& model) {
  if (spec.rfind("mock:", 0) == 0) return ScriptedMockClient::load(std::string(spec.substr(5)));
  if (spec == "http" || spec.rfind("http:", 0) == 0 || spec.rfind("https:", 0) == 0) {
    HttpChatClient::Config c;
    if (spec.rfind("http:", 0) == 0 && spec.size() > 5 && spec.substr(5, 2) != "//") {
      c.endpoint = std::string(spec.substr(5));
    } else if (spec != "http") {
      c.endpoint = std::string(spec);
    }
    if (!model.empty()) c.model = model;
    return std::make_unique<HttpChatClient>(std::move(c));
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown client spec '" + std::string(spec) +
                                               "' (expected mock:<path> or http[:<endpoint>])");
}

}  // namespace fame
