#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "fame/corpus.hpp"
#include "fame/country_table.hpp"
#include "fame/event_store.hpp"
#include "fame/link_set.hpp"
#include "fame/llm_client.hpp"

namespace fame {

enum class PromptVariant { kSimple, kCategory, kCategoryParen, kDefinition };
std::string_view to_string(PromptVariant v);
PromptVariant parse_prompt_variant(std::string_view s);

struct ClassAux {
  std::string category;    // "natural disaster"
  std::string definition;  // "a flood is a rising and overflowing of ..."
};

struct PromptTemplate {
  PromptVariant variant = PromptVariant::kSimple;
  std::map<std::string, ClassAux, std::less<>> aux;

  // Auxiliary texts from data/prompt_aux.json.
  static PromptTemplate builtin(PromptVariant variant = PromptVariant::kSimple);
  // JSON object {class: {category, definition}}.
  static PromptTemplate load(const std::string& path, PromptVariant variant);
  static PromptTemplate parse(std::string_view json, PromptVariant variant);

  // The English question alone. Throws kMissingKey when a non-simple variant
  // lacks auxiliary text for the class.
  std::string question(std::string_view event_class, std::string_view country_name) const;
};

// Title, then the lead sentences (joined by single spaces) when there are
// any, then the question, separated by newlines.
std::string render_prompt(const EventFingerprint& event, const ArticleHead& head,
                          const PromptTemplate& tmpl,
                          const CountryTable& countries = CountryTable::builtin());

enum class Decision { kKeep, kDrop, kIndeterminate };
std::string_view to_string(Decision d);
Decision parse_decision(std::string_view s);

// First alphabetic token, case-insensitive: "yes" keeps, "no" drops,
// anything else (including an empty answer) is indeterminate.
Decision parse_answer(std::string_view answer_raw);

enum class IndeterminatePolicy { kKeep, kDrop, kRetry };
IndeterminatePolicy parse_indeterminate_policy(std::string_view s);

struct RetryPolicy {
  int max_retries = 3;
  std::vector<std::chrono::milliseconds> backoff = {std::chrono::seconds(1), std::chrono::seconds(4),
                                                    std::chrono::seconds(16)};
  // Replaced in tests to avoid real sleeps.
  std::function<void(std::chrono::milliseconds)> sleep;

  std::chrono::milliseconds delay(int retry) const;
};

// SHA-256 of model id, variant, and prompt, separated by U+001F.
std::string cache_key(std::string_view model, PromptVariant variant, std::string_view prompt);

// Append-only JSONL cache of {key, model, answer}. Later lines win on load.
// get/put are safe from several threads; only one process should write.
class ResponseCache {
 public:
  ResponseCache() = default;
  // Loads existing entries (a missing file is an empty cache) and appends
  // new ones to the same path.
  explicit ResponseCache(std::string path);

  std::optional<std::string> get(const std::string& key) const;
  void put(const std::string& key, const std::string& model, const std::string& answer);
  std::size_t size() const;

 private:
  std::string path_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, std::string> entries_;
};

// Token bucket: `rate` tokens per second, up to `burst` stored. A rate of 0
// disables limiting.
class RateLimiter {
 public:
  explicit RateLimiter(double rate = 0, double burst = 1);
  void acquire();

 private:
  double rate_;
  double burst_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
  std::mutex mu_;
};

struct Verdict {
  std::string event_id;
  std::string article_id;
  std::string prompt_sha;
  std::string answer_raw;
  Decision decision = Decision::kIndeterminate;
  bool transport_error = false;

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

nlohmann::ordered_json verdict_to_json(const Verdict& v);
void write_verdicts_jsonl(const std::vector<Verdict>& verdicts, std::ostream& out,
                          const nlohmann::json& header = {});
std::vector<Verdict> read_verdicts_jsonl(std::istream& in);

struct PhaseTwoOptions {
  PromptTemplate prompt = PromptTemplate::builtin();
  IndeterminatePolicy indeterminate = IndeterminatePolicy::kDrop;
  RetryPolicy retry;
  int jobs = 1;            // queries in flight
  double rate_per_second = 0;
  double temperature = 0;
  ResponseCache* cache = nullptr;
  const SentenceSegmenter* segmenter = nullptr;  // nullptr → default
  const CountryTable* countries = nullptr;       // nullptr → builtin
};

struct PhaseTwoStats {
  std::size_t pairs = 0;
  std::size_t unique_prompts = 0;
  std::size_t cache_hits = 0;
  std::size_t client_calls = 0;
  std::size_t keep = 0;
  std::size_t drop = 0;
  std::size_t indeterminate = 0;
  std::size_t transport_failures = 0;
};

struct PhaseTwoResult {
  LinkSet links;          // input with phase2 populated
  std::vector<Verdict> verdicts;  // one per phase-1 pair, in LinkSet order
  PhaseTwoStats stats;
};

// Asks one question per distinct prompt and prunes phase1 into phase2.
// Each pair's decision is the parsed answer; indeterminate answers (and
// transport failures that outlast the retries) follow the configured
// policy, with kRetry re-asking up to retry.max_retries times before
// dropping.
PhaseTwoResult phase_two(const LinkSet& links, const EventStore& events, const Corpus& corpus,
                         LlmClient& client, const PhaseTwoOptions& options = {});

}  // namespace fame
