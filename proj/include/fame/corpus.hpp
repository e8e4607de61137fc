#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "fame/date.hpp"

namespace fame {

class CountryTable;

struct Article {
  std::string id;
  std::string language;  // BCP-47 primary subtag, lowercase
  Date publish_date;
  std::string title;
  std::string body;
  std::optional<std::string> outlet_country;
  std::optional<std::string> url;
};

struct ArticleHead {
  std::string article_id;
  std::string title;
  std::vector<std::string> lead_sentences;
};

// Rule-based sentence splitter. A boundary is a run of . ! ? … (plus any
// closing quotes or brackets) followed by a space and then an uppercase
// letter or an opening quote/bracket. A lone '.' ending a word from the
// language's abbreviation list never splits. Input is expected to be
// whitespace-normalized.
class SentenceSegmenter {
 public:
  using AbbreviationMap = std::map<std::string, std::set<std::string>>;

  explicit SentenceSegmenter(AbbreviationMap abbreviations = {})
      : abbreviations_(std::move(abbreviations)) {}

  // en/es/fr lists shipped in data/abbreviations/.
  static const SentenceSegmenter& default_instance();
  // Reads one abbreviation per line ('#' comments) and merges it into the
  // list for `language`.
  void load_abbreviations(const std::string& language, const std::string& path);
  void add_abbreviations(const std::string& language, std::string_view file_content);

  std::vector<std::string> split(std::string_view text, std::string_view language,
                                 std::size_t max_sentences = SIZE_MAX) const;

 private:
  bool is_abbreviation(std::string_view word_with_period, std::string_view language) const;

  AbbreviationMap abbreviations_;
};

ArticleHead extract_head(const Article& article,
                         const SentenceSegmenter& segmenter = SentenceSegmenter::default_instance());

// Case-folded, normalized text of the fields the matcher scans.
struct MatchText {
  std::string title;
  std::string head;  // title excluded; the lead sentences joined by spaces
  std::string body;
};

// Article collection ordered by (publish_date, id), with date and language
// indexes. Immutable once built.
class Corpus {
 public:
  struct BuildOptions {
    const SentenceSegmenter* segmenter = nullptr;
    int jobs = 1;
  };

  Corpus() = default;
  // Throws on duplicate ids or empty language tags.
  static Corpus build(std::vector<Article> articles, const BuildOptions& options);
  static Corpus build(std::vector<Article> articles) { return build(std::move(articles), BuildOptions{}); }

  std::size_t size() const { return articles_.size(); }
  bool empty() const { return articles_.empty(); }
  const Article& at(std::size_t index) const { return articles_[index]; }
  const std::vector<Article>& articles() const { return articles_; }
  const MatchText& match_text(std::size_t index) const { return match_[index]; }
  std::optional<std::size_t> index_of(std::string_view id) const;
  const Article* find(std::string_view id) const;

  // Indices with publish_date in [t - before_days, t + after_days], in
  // (date, id) order.
  std::pair<std::size_t, std::size_t> window_range(Date t, int after_days,
                                                   int before_days = 0) const;
  std::vector<std::string> slice_window(Date t, int after_days, int before_days = 0) const;

  std::vector<std::string> languages() const;
  std::span<const std::size_t> language_partition(std::string_view language) const;
  std::optional<Date> min_date() const;
  std::optional<Date> max_date() const;

 private:
  std::vector<Article> articles_;
  std::vector<MatchText> match_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::map<std::string, std::vector<std::size_t>, std::less<>> by_language_;
};

enum class MalformedPolicy { kSkip, kFail };

struct CorpusFilters {
  std::optional<std::set<std::string>> languages;
  std::optional<Date> from;
  std::optional<Date> to;
  std::set<std::string> blocked_hosts;
};

struct CorpusLoadOptions {
  CorpusFilters filters;
  MalformedPolicy malformed = MalformedPolicy::kSkip;
  int jobs = 1;
  const SentenceSegmenter* segmenter = nullptr;
  const CountryTable* countries = nullptr;  // normalizes outlet_country when set
};

struct CorpusLoadStats {
  std::size_t shards = 0;
  std::size_t lines = 0;
  std::size_t loaded = 0;
  std::size_t malformed = 0;
  std::size_t duplicate_ids = 0;
  std::size_t dropped_language = 0;
  std::size_t dropped_date = 0;
  std::size_t dropped_host = 0;
};

struct CorpusLoadResult {
  Corpus corpus;
  CorpusLoadStats stats;
};

// `path` is a JSONL file or a directory whose *.jsonl shards are read in
// filename order. The result does not depend on `jobs`.
CorpusLoadResult load_corpus(const std::string& path, const CorpusLoadOptions& options = {});
// Parses JSONL text as a single shard.
CorpusLoadResult load_corpus_from_string(std::string_view content,
                                         const CorpusLoadOptions& options = {});

// Lowercased host of an http(s) or schemeless URL, or empty for other
// schemes.
std::string url_host(std::string_view url);
bool host_blocked(std::string_view host, const std::set<std::string>& blocklist);
std::set<std::string> load_blocklist(const std::string& path);

nlohmann::json article_to_json(const Article& a);

}  // namespace fame
