#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fame/country_table.hpp"

namespace fame {

class LlmClient;

enum class Provenance { kGazetteer, kThesaurus, kLlmVote, kManual };
std::string_view to_string(Provenance p);
Provenance parse_provenance(std::string_view s);

// Keywords for one event class or one country in one language. Keywords are
// stored in match-normalized form (case-folded NFC, single spaces); the
// first provenance recorded for a keyword wins.
struct KeywordSet {
  std::string key;
  std::string language;
  std::map<std::string, Provenance> keywords;

  // Returns false if the keyword was empty or already present.
  bool add(std::string_view keyword, Provenance provenance);
  bool contains(std::string_view keyword) const;
  std::size_t size() const { return keywords.size(); }
  bool empty() const { return keywords.empty(); }
  std::vector<std::string> words() const;

  friend bool operator==(const KeywordSet&, const KeywordSet&) = default;
};

struct KeywordLexicon {
  std::string language;
  std::map<std::string, KeywordSet> class_sets;     // event class → set
  std::map<std::string, KeywordSet> location_sets;  // alpha-3 → set

  KeywordSet& class_set(const std::string& event_class);
  KeywordSet& location_set(const std::string& country);
  std::size_t keyword_count() const;

  friend bool operator==(const KeywordLexicon&, const KeywordLexicon&) = default;
};

// --- Location sets ---------------------------------------------------------

struct GazetteerCountry {
  std::string name;
  std::vector<std::string> demonyms;
  std::vector<std::string> alt_names;
};

struct GazetteerCity {
  std::string name;
  std::string country;
  std::int64_t population = 0;
};

// Country names/demonyms, admin1 provinces, and cities with populations, all
// in one language. Codes in the input files may be alpha-2, alpha-3, or
// names; they are resolved through the country table.
class Gazetteer {
 public:
  // country_info: alpha3,name,demonyms[,alt_names] (multi-valued fields use ';')
  // admin1:       alpha3,admin1
  // cities:       city,alpha3,population
  static Gazetteer load(const std::string& country_info, const std::string& admin1,
                        const std::string& cities, const CountryTable& table = CountryTable::builtin());
  static Gazetteer parse(std::string_view country_info, std::string_view admin1,
                         std::string_view cities, const CountryTable& table = CountryTable::builtin());

  const std::map<std::string, GazetteerCountry>& countries() const { return countries_; }
  const std::multimap<std::string, std::string>& admin1() const { return admin1_; }
  const std::vector<GazetteerCity>& cities() const { return cities_; }

  // The `n` most populous cities worldwide; ties broken by name, then code.
  std::vector<const GazetteerCity*> top_cities(std::size_t n) const;

 private:
  friend struct GazetteerBuilder;

  std::map<std::string, GazetteerCountry> countries_;
  std::multimap<std::string, std::string> admin1_;
  std::vector<GazetteerCity> cities_;
};

// Country name ∪ demonyms ∪ alternate names ∪ admin1 names ∪ the country's
// cities among the global top `top_cities` by population. Throws kNotFound
// for a country absent from the gazetteer.
KeywordSet build_location_set(const std::string& country, const Gazetteer& gazetteer,
                              const std::string& language, std::size_t top_cities = 5000);
// Country name only (the keyword baseline's location lists).
KeywordSet build_country_name_set(const std::string& country, const Gazetteer& gazetteer,
                                  const std::string& language);

// --- Class sets ------------------------------------------------------------

struct AffixRules {
  std::string language;
  std::vector<std::string> strip_suffixes;  // tried longest first
  std::vector<std::string> affixes;         // may include ""
  std::size_t min_stem = 3;

  static AffixRules from_json(const nlohmann::json& j);
  static AffixRules load(const std::string& path);
  // en/es/fr rules shipped in data/lexicon/<lang>/affixes.json.
  static AffixRules builtin(const std::string& language);
};

// Strips at most one suffix, keeping at least `min_stem` bytes.
std::string light_stem(std::string_view word, const AffixRules& rules);

// Every base word is kept as is, and its stem is crossed with every affix.
KeywordSet build_class_set(const std::string& event_class, const std::string& language,
                           const std::vector<std::string>& base_words, const AffixRules& rules,
                           Provenance provenance = Provenance::kThesaurus);

// CSV class,word → class → words (file order).
std::map<std::string, std::vector<std::string>> load_wordlist(const std::string& path);
std::map<std::string, std::vector<std::string>> parse_wordlist(std::string_view csv_content);

// CSV kind,key,keyword with kind ∈ {class, location}; added with manual
// provenance. Returns the number of new keywords.
std::size_t add_extra_keywords(KeywordLexicon& lexicon, const std::string& path);

// --- Vote expansion --------------------------------------------------------

// Number of runs a candidate must appear in: ceil(threshold * runs).
std::size_t vote_quorum(double threshold, std::size_t runs);

// Accepts each case-folded candidate that appears in at least
// vote_quorum(threshold, runs.size()) runs and is not already in `existing`.
// Duplicates inside one run count once. Result is sorted.
std::vector<std::string> vote_expand(const KeywordSet& existing,
                                     const std::vector<std::vector<std::string>>& runs,
                                     double threshold = 0.5);

class KeywordSampler {
 public:
  virtual ~KeywordSampler() = default;
  // One sampling run for `display_name` (an event class or country name).
  virtual std::vector<std::string> sample(const std::string& display_name, bool is_location,
                                          std::size_t run) = 0;
};

// Asks an LLM for comma-separated synonyms/hyponyms at temperature 0.5.
class LlmKeywordSampler : public KeywordSampler {
 public:
  LlmKeywordSampler(LlmClient& client, std::string language, double temperature = 0.5)
      : client_(client), language_(std::move(language)), temperature_(temperature) {}

  std::vector<std::string> sample(const std::string& display_name, bool is_location,
                                  std::size_t run) override;

  std::string prompt(const std::string& display_name, bool is_location) const;

 private:
  LlmClient& client_;
  std::string language_;
  double temperature_;
};

// Parses "a, b\n- c\n1. d" style answers into a keyword list.
std::vector<std::string> parse_keyword_list(std::string_view answer);

// Runs the sampler `runs` times (on up to `jobs` threads) and returns the
// per-run lists in run order.
std::vector<std::vector<std::string>> collect_runs(KeywordSampler& sampler,
                                                   const std::string& display_name,
                                                   bool is_location, std::size_t runs,
                                                   int jobs = 1);

// --- Persistence -----------------------------------------------------------

nlohmann::json lexicon_to_json(const KeywordLexicon& lexicon);
KeywordLexicon lexicon_from_json(const nlohmann::json& j);
void save_lexicon(const KeywordLexicon& lexicon, const std::string& path);

struct LexiconUniverse {
  std::vector<std::string> classes;
  std::vector<std::string> countries;
};

// Throws kSchema on malformed files. Sets missing or empty for any member of
// `universe` are created empty and reported in `warnings`.
KeywordLexicon load_lexicon(const std::string& path,
                            const std::optional<LexiconUniverse>& universe = std::nullopt,
                            std::vector<std::string>* warnings = nullptr);

}  // namespace fame
