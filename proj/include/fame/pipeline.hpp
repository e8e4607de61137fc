#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fame/attention.hpp"
#include "fame/corpus.hpp"
#include "fame/evalkit.hpp"
#include "fame/event_store.hpp"
#include "fame/link_set.hpp"
#include "fame/llm_filter.hpp"
#include "fame/matcher.hpp"

namespace fame {

std::string_view version();

// {config_sha256, seed, version}; no timestamps, so reruns are byte-identical.
nlohmann::ordered_json make_header(std::string_view config_text, std::uint64_t seed);

// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::string& path, std::string_view content);

// Outputs staged in memory and written only by commit(), so a failing run
// leaves no partial files.
class OutputSet {
 public:
  void add(std::string path, std::string content) { files_.emplace_back(std::move(path), std::move(content)); }
  void commit() const;
  const std::vector<std::pair<std::string, std::string>>& files() const { return files_; }

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

// --- Funnel ----------------------------------------------------------------

struct PhaseCounts {
  std::size_t articles = 0;  // distinct articles linked to any event
  std::size_t pairs = 0;     // (event, article) pairs
  std::size_t events = 0;    // events with at least one article
  double median_per_event = 0;
  std::size_t max_per_event = 0;
};

struct FunnelLanguage {
  std::string language;
  std::size_t corpus_articles = 0;
  std::size_t window_articles = 0;  // distinct articles inside some event window
  PhaseCounts phase1;
  std::optional<PhaseCounts> phase2;
};

struct FunnelReport {
  std::vector<FunnelLanguage> languages;  // sorted by tag
};

// Per-event medians and maxima are taken over the events with at least one
// article at that phase in that language.
FunnelReport compute_funnel(const LinkSet& links, const EventStore& events, const Corpus& corpus,
                            int window_days = 7, int window_before_days = 0);
nlohmann::ordered_json funnel_to_json(const FunnelReport& f);
std::string funnel_table(const FunnelReport& f);

// Every violation of phase2 ⊆ phase1 ⊆ window slice ⊆ corpus, per event.
std::vector<std::string> check_funnel(const LinkSet& links, const EventStore& events, const Corpus& corpus,
                                      int window_days, int window_before_days = 0);

// --- Full pipeline ---------------------------------------------------------

struct PipelineConfig {
  std::string events;
  std::string events_format = "csv";
  std::string column_mapping;
  bool strict = false;
  bool gtd_salience = false;
  std::vector<std::string> corpus;
  std::string blocklist;
  std::vector<std::string> languages;
  std::vector<std::string> lexicons;  // one JSON file per language
  MatchScope scope = MatchScope::kTitlePlusBody;
  int window_days = 7;
  int window_before_days = 0;
  std::string client = "http";
  std::string model;
  PromptVariant variant = PromptVariant::kSimple;
  std::string prompt_aux;
  IndeterminatePolicy indeterminate = IndeterminatePolicy::kDrop;
  std::string cache;
  double rate_per_second = 0;
  std::string labels;
  std::size_t top_k = 10;
  int jobs = 1;
  std::uint64_t seed = 0;

  nlohmann::ordered_json to_json() const;
  // Hash input for output headers.
  std::string canonical() const { return to_json().dump(); }
};

struct PipelineResult {
  EventStore events;
  Corpus corpus;
  LinkSet links;
  std::vector<Verdict> verdicts;
  PhaseOneStats phase1_stats;
  PhaseTwoStats phase2_stats;
  FunnelReport funnel;
  std::vector<RankedEvent> ranking;
  std::optional<EvalReport> evaluation;
};

// ingest → match → filter → funnel check → rank → evaluate. `client`
// overrides config.client when given.
PipelineResult run_pipeline(const PipelineConfig& config, LlmClient* client = nullptr);

// Serialized outputs of a run under `out_dir`: links.jsonl, verdicts.jsonl,
// funnel.json, ranking.json, and eval.json when labels were given.
OutputSet pipeline_outputs(const PipelineResult& result, const PipelineConfig& config,
                           const std::string& out_dir);

}  // namespace fame
