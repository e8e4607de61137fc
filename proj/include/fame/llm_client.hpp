#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fame/error.hpp"

namespace fame {

struct LlmRequest {
  std::string prompt;
  double temperature = 0.0;
};

// Raised by clients for failures worth retrying (connection errors, HTTP
// 5xx/429, malformed responses).
class TransportError : public Error {
 public:
  explicit TransportError(const std::string& message) : Error(ErrorCode::kTransport, message) {}
};

// Prompt in, answer text out. Implementations must be safe to call from
// several threads at once.
class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual std::string model_id() const = 0;
  virtual std::string complete(const LlmRequest& request) = 0;
  // Requests that reached the transport (successful or not).
  std::size_t calls() const { return calls_.load(); }

 protected:
  void count_call() { ++calls_; }

 private:
  std::atomic<std::size_t> calls_{0};
};

// Deterministic client driven by a JSONL script. Each line is one of
//   {"contains": ["storm in India", "Cyclone"], "answer": "Yes"}
//   {"prompt_sha256": "<hex>", "answer": "No."}
//   {"default": "No"}
// Rules are tried in file order; the first match answers. Without a match
// and without a default, complete() throws TransportError.
class ScriptedMockClient : public LlmClient {
 public:
  struct Rule {
    std::vector<std::string> contains;
    std::string prompt_sha256;
    std::string answer;
  };

  ScriptedMockClient(std::vector<Rule> rules, std::optional<std::string> fallback,
                     std::string model = "mock")
      : rules_(std::move(rules)), default_(std::move(fallback)), model_(std::move(model)) {}

  static std::unique_ptr<ScriptedMockClient> load(const std::string& path);
  static std::unique_ptr<ScriptedMockClient> parse(std::string_view jsonl);

  std::string model_id() const override { return model_; }
  std::string complete(const LlmRequest& request) override;

 private:
  std::vector<Rule> rules_;
  std::optional<std::string> default_;
  std::string model_;
};

// OpenAI-style chat-completions client over HTTP(S).
class HttpChatClient : public LlmClient {
 public:
  struct Config {
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string model = "gpt-3.5-turbo";
    std::string api_key;  // falls back to $FAME_LLM_API_KEY
    std::chrono::seconds timeout{60};
  };

  explicit HttpChatClient(Config config);

  std::string model_id() const override { return config_.model; }
  std::string complete(const LlmRequest& request) override;

 private:
  Config config_;
  std::string scheme_host_port_;
  std::string path_;
};

// "mock:<script.jsonl>" or "http[:<endpoint>]".
std::unique_ptr<LlmClient> make_client(std::string_view spec, const std::string& model);

}  // namespace fame
