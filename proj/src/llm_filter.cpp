#include "fame/llm_filter.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include <unicode/uchar.h>

#include "fame/embedded.hpp"
#include "fame/error.hpp"
#include "fame/hash.hpp"
#include "fame/log.hpp"
#include "fame/text.hpp"

namespace fame {

std::string_view to_string(PromptVariant v) {
  switch (v) {
    case PromptVariant::kSimple: return "simple";
    case PromptVariant::kCategory: return "category";
    case PromptVariant::kCategoryParen: return "category_paren";
    case PromptVariant::kDefinition: return "definition";
  }
  return "simple";
}

PromptVariant parse_prompt_variant(std::string_view s) {
  if (s == "simple") return PromptVariant::kSimple;
  if (s == "category") return PromptVariant::kCategory;
  if (s == "category_paren") return PromptVariant::kCategoryParen;
  if (s == "definition") return PromptVariant::kDefinition;
  throw Error(ErrorCode::kInvalidArgument, "unknown prompt variant '" + std::string(s) + "'");
}

PromptTemplate PromptTemplate::parse(std::string_view json, PromptVariant variant) {
  PromptTemplate t;
  t.variant = variant;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("prompt aux file: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kSchema, "prompt aux file must be a JSON object");
  for (const auto& [cls, v] : j.items()) {
    ClassAux a;
    a.category = v.value("category", "");
    a.definition = v.value("definition", "");
    t.aux.emplace(cls, std::move(a));
  }
  return t;
}

PromptTemplate PromptTemplate::builtin(PromptVariant variant) {
  return parse(embedded_data("prompt_aux.json"), variant);
}

PromptTemplate PromptTemplate::load(const std::string& path, PromptVariant variant) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open prompt aux file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), variant);
}

std::string PromptTemplate::question(std::string_view event_class,
                                     std::string_view country_name) const {
  std::string c(event_class);
  std::string l(country_name);
  if (variant == PromptVariant::kSimple) {
    return "Does the text discuss a recent " + c + " in " + l + "?";
  }
  auto it = aux.find(event_class);
  const bool want_definition = variant == PromptVariant::kDefinition;
  if (it == aux.end() || (want_definition ? it->second.definition : it->second.category).empty()) {
    throw Error(ErrorCode::kMissingKey,
                "no " + std::string(want_definition ? "definition" : "category") + " for class '" + c + "'");
  }
  switch (variant) {
    case PromptVariant::kCategory:
      return "Does the text discuss a recent " + c + " " + it->second.category + " in " + l + "?";
    case PromptVariant::kCategoryParen:
      return "Does the text discuss a recent " + c + " (" + it->second.category + ") in " + l + "?";
    default:
      return "Does the text discuss a recent " + c + ", where " + it->second.definition + ", in " + l + "?";
  }
}

std::string render_prompt(const EventFingerprint& event, const ArticleHead& head,
                          const PromptTemplate& tmpl, const CountryTable& countries) {
  std::string out = head.title;
  if (!head.lead_sentences.empty()) {
    out += '\n';
    for (std::size_t i = 0; i < head.lead_sentences.size(); ++i) {
      if (i) out += ' ';
      out += head.lead_sentences[i];
    }
  }
  out += '\n';
  out += tmpl.question(event.event_class.name(), countries.display_name(event.country));
  return out;
}

std::string_view to_string(Decision d) {
  switch (d) {
    case Decision::kKeep: return "keep";
    case Decision::kDrop: return "drop";
    case Decision::kIndeterminate: return "indeterminate";
  }
  return "indeterminate";
}

Decision parse_decision(std::string_view s) {
  if (s == "keep") return Decision::kKeep;
  if (s == "drop") return Decision::kDrop;
  if (s == "indeterminate") return Decision::kIndeterminate;
  throw Error(ErrorCode::kParse, "unknown decision '" + std::string(s) + "'");
}

Decision parse_answer(std::string_view answer) {
  std::size_t pos = 0;
  std::size_t start = std::string_view::npos;
  std::size_t end = answer.size();
  while (pos < answer.size()) {
    const std::size_t at = pos;
    const char32_t cp = text::decode_next(answer, pos);
    const bool alpha = u_isalpha(static_cast<UChar32>(cp));
    if (start == std::string_view::npos) {
      if (alpha) start = at;
    } else if (!alpha) {
      end = at;
      break;
    }
  }
  if (start == std::string_view::npos) return Decision::kIndeterminate;
  const std::string token = text::normalize_match(answer.substr(start, end - start));
  if (token == "yes") return Decision::kKeep;
  if (token == "no") return Decision::kDrop;
  return Decision::kIndeterminate;
}

IndeterminatePolicy parse_indeterminate_policy(std::string_view s) {
  if (s == "keep") return IndeterminatePolicy::kKeep;
  if (s == "drop") return IndeterminatePolicy::kDrop;
  if (s == "retry") return IndeterminatePolicy::kRetry;
  throw Error(ErrorCode::kInvalidArgument, "indeterminate policy must be keep, drop, or retry");
}

std::chrono::milliseconds RetryPolicy::delay(int retry) const {
  if (backoff.empty()) return std::chrono::milliseconds(0);
  const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(std::max(retry, 0)), backoff.size() - 1);
  return backoff[i];
}

std::string cache_key(std::string_view model, PromptVariant variant, std::string_view prompt) {
  std::string material(model);
  material += '\x1f';
  material += to_string(variant);
  material += '\x1f';
  material += prompt;
  return sha256_hex(material);
}

ResponseCache::ResponseCache(std::string path) : path_(std::move(path)) {
  std::ifstream in(path_, std::ios::binary);
  if (!in) return;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      entries_[j.at("key").get<std::string>()] = j.at("answer").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kParse, "cache line " + std::to_string(lineno) + ": " + e.what(),
                  {{"path", path_}});
    }
  }
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::put(const std::string& key, const std::string& model, const std::string& answer) {
  std::lock_guard lock(mu_);
  entries_[key] = answer;
  if (path_.empty()) return;
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw Error(ErrorCode::kInternal, "cannot append to cache '" + path_ + "'");
  nlohmann::ordered_json j = {{"key", key}, {"model", model}, {"answer", answer}};
  out << j.dump() << '\n';
}

std::size_t ResponseCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

RateLimiter::RateLimiter(double rate, double burst)
    : rate_(rate), burst_(std::max(1.0, burst)), tokens_(std::max(1.0, burst)),
      last_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
  if (rate_ <= 0) return;
  std::unique_lock lock(mu_);
  for (;;) {
    const auto now = std::chrono::steady_clock::now();
    tokens_ = std::min(burst_, tokens_ + std::chrono::duration<double>(now - last_).count() * rate_);
    last_ = now;
    if (tokens_ >= 1) {
      tokens_ -= 1;
      return;
    }
    const auto wait = std::chrono::duration<double>((1 - tokens_) / rate_);
    lock.unlock();
    std::this_thread::sleep_for(wait);
    lock.lock();
  }
}

nlohmann::ordered_json verdict_to_json(const Verdict& v) {
  nlohmann::ordered_json j = {{"event_id", v.event_id},
                              {"article_id", v.article_id},
                              {"prompt_sha", v.prompt_sha},
                              {"answer_raw", v.answer_raw},
                              {"decision", to_string(v.decision)}};
  if (v.transport_error) j["transport_error"] = true;
  return j;
}

void write_verdicts_jsonl(const std::vector<Verdict>& verdicts, std::ostream& out,
                          const nlohmann::json& header) {
  if (!header.is_null() && !header.empty()) {
    out << nlohmann::json{{"fame_header", header}}.dump() << '\n';
  }
  for (const auto& v : verdicts) {
    out << verdict_to_json(v).dump() << '\n';
  }
}

std::vector<Verdict> read_verdicts_jsonl(std::istream& in) {
  std::vector<Verdict> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto j = nlohmann::json::parse(line);
    if (j.contains("fame_header")) continue;
    Verdict v;
    v.event_id = j.at("event_id").get<std::string>();
    v.article_id = j.at("article_id").get<std::string>();
    v.prompt_sha = j.at("prompt_sha").get<std::string>();
    v.answer_raw = j.at("answer_raw").get<std::string>();
    v.decision = parse_decision(j.at("decision").get<std::string>());
    v.transport_error = j.value("transport_error", false);
    out.push_back(std::move(v));
  }
  return out;
}

namespace {

struct Query {
  std::string prompt;
  std::string key;
  std::string answer;
  Decision decision = Decision::kIndeterminate;
  bool transport_error = false;
  bool cached = false;
};

// One call with transport retries. Returns nullopt if every attempt failed.
std::optional<std::string> ask(LlmClient& client, const LlmRequest& req, const RetryPolicy& retry,
                               RateLimiter& limiter, std::string& last_error) {
  for (int attempt = 0;; ++attempt) {
    limiter.acquire();
    try {
      return client.complete(req);
    } catch (const TransportError& e) {
      last_error = e.what();
      if (attempt >= retry.max_retries) return std::nullopt;
      const auto d = retry.delay(attempt);
      if (retry.sleep) {
        retry.sleep(d);
      } else {
        std::this_thread::sleep_for(d);
      }
    }
  }
}

}  // namespace

PhaseTwoResult phase_two(const LinkSet& links, const EventStore& events, const Corpus& corpus,
                         LlmClient& client, const PhaseTwoOptions& opt) {
  const SentenceSegmenter& seg = opt.segmenter ? *opt.segmenter : SentenceSegmenter::default_instance();
  const CountryTable& countries = opt.countries ? *opt.countries : CountryTable::builtin();
  const std::string model = client.model_id();

  // Render every pair; dedupe by cache key.
  struct Pair {
    std::string event_id;
    std::string article_id;
    std::size_t query;
  };
  std::vector<Pair> pairs;
  std::vector<Query> queries;
  std::unordered_map<std::string, std::size_t> by_key;
  for (const auto& eid : links.event_ids()) {
    const EventRecord* rec = events.find(eid);
    if (!rec) throw Error(ErrorCode::kNotFound, "link set names unknown event '" + eid + "'");
    for (const auto& aid : links.find(eid)->phase1) {
      const Article* art = corpus.find(aid);
      if (!art) {
        throw Error(ErrorCode::kNotFound, "link set names unknown article '" + aid + "'",
                    {{"event_id", eid}});
      }
      std::string prompt = render_prompt(rec->fingerprint, extract_head(*art, seg), opt.prompt, countries);
      std::string key = cache_key(model, opt.prompt.variant, prompt);
      auto [it, inserted] = by_key.emplace(key, queries.size());
      if (inserted) {
        Query q;
        q.prompt = std::move(prompt);
        q.key = std::move(key);
        queries.push_back(std::move(q));
      }
      pairs.push_back({eid, aid, it->second});
    }
  }

  RateLimiter limiter(opt.rate_per_second, std::max(1, opt.jobs));
  const std::size_t calls_before = client.calls();
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> cache_hits{0};
  std::mutex err_mu;
  std::exception_ptr fatal;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= queries.size()) return;
      Query& q = queries[i];
      try {
        if (opt.cache) {
          if (auto hit = opt.cache->get(q.key)) {
            q.answer = *hit;
            q.decision = parse_answer(q.answer);
            q.cached = true;
            ++cache_hits;
          }
        }
        const LlmRequest req{q.prompt, opt.temperature};
        std::string err;
        if (!q.cached) {
          if (auto answer = ask(client, req, opt.retry, limiter, err)) {
            q.answer = *answer;
            q.decision = parse_answer(q.answer);
            if (opt.cache) opt.cache->put(q.key, model, q.answer);
          } else {
            q.transport_error = true;
          }
        }
        if (opt.indeterminate == IndeterminatePolicy::kRetry) {
          // Re-ask; the latest answer overrides the cached one.
          for (int r = 0; r < opt.retry.max_retries && !q.transport_error &&
                          q.decision == Decision::kIndeterminate;
               ++r) {
            auto answer = ask(client, req, opt.retry, limiter, err);
            if (!answer) break;
            q.answer = *answer;
            q.decision = parse_answer(q.answer);
            if (opt.cache) opt.cache->put(q.key, model, q.answer);
          }
        }
        if (q.transport_error) {
          log::warn("llm.transport_failure", {{"prompt_sha", q.key}, {"error", err}});
        }
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!fatal) fatal = std::current_exception();
        next.store(queries.size());
        return;
      }
    }
  };
  const int jobs = static_cast<int>(std::min<std::size_t>(std::max(1, opt.jobs), std::max<std::size_t>(1, queries.size())));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int t = 0; t < jobs; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  PhaseTwoResult result;
  result.links = links;
  result.stats.pairs = pairs.size();
  result.stats.unique_prompts = queries.size();
  result.stats.cache_hits = cache_hits.load();
  result.stats.client_calls = client.calls() - calls_before;
  for (const auto& eid : links.event_ids()) result.links.find_mutable(eid)->phase2.emplace();
  for (const auto& p : pairs) {
    const Query& q = queries[p.query];
    Verdict v{p.event_id, p.article_id, q.key, q.answer, q.decision, q.transport_error};
    bool keep = false;
    switch (q.decision) {
      case Decision::kKeep:
        keep = true;
        ++result.stats.keep;
        break;
      case Decision::kDrop:
        ++result.stats.drop;
        break;
      case Decision::kIndeterminate:
        keep = opt.indeterminate == IndeterminatePolicy::kKeep;
        ++result.stats.indeterminate;
        if (q.transport_error) ++result.stats.transport_failures;
        log::warn("llm.indeterminate", {{"event_id", p.event_id},
                                        {"article_id", p.article_id},
                                        {"answer_raw", q.answer},
                                        {"resolved", keep ? "keep" : "drop"}});
        break;
    }
    if (keep) result.links.find_mutable(p.event_id)->phase2->push_back(p.article_id);
    result.verdicts.push_back(std::move(v));
  }
  return result;
}

}  // namespace fame
