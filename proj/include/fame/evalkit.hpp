#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fame/corpus.hpp"
#include "fame/event_store.hpp"
#include "fame/lexicon.hpp"
#include "fame/link_set.hpp"
#include "fame/matcher.hpp"

namespace fame {

enum class Label { kPositive, kNegative };
std::string_view to_string(Label l);
// positive/negative, yes/no, 1/0, true/false (case-insensitive).
Label parse_label(std::string_view s);

struct AnnotationLabel {
  std::string event_id;
  std::string article_id;
  Label label = Label::kNegative;
  std::string annotator;  // empty in adjudicated files

  friend bool operator==(const AnnotationLabel&, const AnnotationLabel&) = default;
};

// CSV event_id,article_id,label[,annotator]. Throws kSchema on a repeated
// (event, article, annotator) triple.
std::vector<AnnotationLabel> load_labels(const std::string& path);
std::vector<AnnotationLabel> parse_labels(std::string_view csv_content);

using PairKey = std::pair<std::string, std::string>;  // (event_id, article_id)

// Final labels keyed by pair. Throws kSchema if one pair carries both labels.
std::map<PairKey, Label> gold_map(const std::vector<AnnotationLabel>& labels);

// --- Sampling --------------------------------------------------------------

struct SamplingOptions {
  std::size_t per_class = 3;
  std::size_t per_class_attack = 4;
  std::size_t min_phase1 = 30;
  std::size_t min_phase2 = 5;
  std::size_t cap = 150;
  std::uint64_t seed = 0;
};

struct SampledEvent {
  std::string event_id;
  std::vector<std::string> article_ids;  // first `cap` phase-1 articles
};

struct ClassSample {
  std::string event_class;
  std::size_t events = 0;    // events of the class in the store
  std::size_t eligible = 0;  // meeting the phase-1/phase-2 minimums
  bool sampled = false;      // false → every event of the class was taken
  std::vector<SampledEvent> selected;
  std::string note;
};

struct SamplingPlan {
  std::vector<ClassSample> classes;  // sorted by class name
};

// Uniform integer in [0, bound) from a 64-bit engine, by rejection. Stable
// across standard libraries, unlike std::uniform_int_distribution.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound);

SamplingPlan sample_for_annotation(const EventStore& events, const LinkSet& links,
                                   const SamplingOptions& options = {},
                                   const Corpus* corpus = nullptr);
nlohmann::ordered_json sampling_plan_to_json(const SamplingPlan& plan);
// event_id,article_id rows for annotators.
void write_sampling_csv(const SamplingPlan& plan, std::ostream& out);

// --- Agreement -------------------------------------------------------------

struct AgreementResult {
  std::size_t items = 0;       // pairs labeled by both
  std::size_t only_a = 0;      // pairs labeled by a only
  std::size_t only_b = 0;
  std::size_t both_positive = 0, a_pos_b_neg = 0, a_neg_b_pos = 0, both_negative = 0;
  double observed = 0;         // p_o
  double expected = 0;         // p_e
  double kappa = 0;
};

// Over the pairs both annotators labeled. When p_e = 1, kappa is 1 if the
// labelings agree everywhere and NaN otherwise. Throws kInvalidArgument on
// an empty overlap.
AgreementResult agreement(const std::vector<AnnotationLabel>& a, const std::vector<AnnotationLabel>& b);
// Splits one labels file by annotator (exactly two expected) and compares.
AgreementResult agreement(const std::vector<AnnotationLabel>& labels);
nlohmann::ordered_json agreement_to_json(const AgreementResult& r);

// --- Scoring ---------------------------------------------------------------

struct EventScore {
  std::string event_id;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::size_t unannotated_predictions = 0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  bool eligible = false;
  std::string note;
};

struct Summary {
  double min = 0, median = 0, max = 0;
};

struct EvalReport {
  std::string method;
  std::vector<EventScore> events;  // gold event order (first appearance)
  std::size_t eligible_events = 0;
  std::vector<std::string> excluded_events;
  double macro_precision = 0;
  double macro_recall = 0;
  double macro_f1 = 0;        // mean of per-event F1
  double f1_of_means = 0;     // harmonic mean of macro P and R
  std::optional<Summary> precision_spread, recall_spread, f1_spread;
  std::size_t unannotated_predictions = 0;
  std::size_t unscored_prediction_events = 0;  // predicted events without gold
};

struct ScoreOptions {
  Phase phase = Phase::kPhase2;
  bool strict = false;  // unannotated predictions become an error
  std::string method = "fame";
};

// Scores each gold event: predictions outside the event's annotated pairs
// are counted and skipped. The macro means cover events with at least one
// gold positive and a defined precision.
EvalReport score(const LinkSet& predictions, const std::vector<AnnotationLabel>& gold,
                 const ScoreOptions& options = {});
EvalReport score(const std::map<std::string, std::vector<std::string>>& predictions,
                 const std::vector<AnnotationLabel>& gold, const ScoreOptions& options = {});

// Metrics ×100 in JSON and tables.
nlohmann::ordered_json report_to_json(const EvalReport& r);
std::string report_table(const std::vector<EvalReport>& reports);
void write_per_event_csv(const EvalReport& r, std::ostream& out);

// --- Keyword baseline ------------------------------------------------------

// data/baseline/en_classes.csv.
std::map<std::string, std::vector<std::string>> builtin_baseline_wordlist();

// Class sets from `class_words` verbatim (no affix expansion) and location
// sets copied from `locations`.
KeywordLexicon make_baseline_lexicon(const std::map<std::string, std::vector<std::string>>& class_words,
                                     const KeywordLexicon& locations);

// Phase one with the baseline lexicon and the given scope; no phase two.
LinkSet keyword_baseline(const EventStore& events, const Corpus& corpus,
                         const KeywordLexicon& baseline_lexicon, MatchScope scope,
                         PhaseOneOptions options = {});

}  // namespace fame
