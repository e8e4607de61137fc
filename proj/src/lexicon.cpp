#include "fame/lexicon.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "fame/csv.hpp"
#include "fame/embedded.hpp"
#include "fame/event_store.hpp"
#include "fame/error.hpp"
#include "fame/llm_client.hpp"
#include "fame/log.hpp"
#include "fame/parallel.hpp"
#include "fame/text.hpp"

namespace fame {

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::kGazetteer: return "gazetteer";
    case Provenance::kThesaurus: return "thesaurus";
    case Provenance::kLlmVote: return "llm_vote";
    case Provenance::kManual: return "manual";
  }
  return "manual";
}

Provenance parse_provenance(std::string_view s) {
  if (s == "gazetteer") return Provenance::kGazetteer;
  if (s == "thesaurus") return Provenance::kThesaurus;
  if (s == "llm_vote") return Provenance::kLlmVote;
  if (s == "manual") return Provenance::kManual;
  throw Error(ErrorCode::kSchema, "unknown provenance '" + std::string(s) + "'");
}

bool KeywordSet::add(std::string_view keyword, Provenance provenance) {
  std::string k = text::normalize_match(keyword);
  if (k.empty()) return false;
  return keywords.emplace(std::move(k), provenance).second;
}

bool KeywordSet::contains(std::string_view keyword) const {
  return keywords.count(text::normalize_match(keyword)) > 0;
}

std::vector<std::string> KeywordSet::words() const {
  std::vector<std::string> out;
  out.reserve(keywords.size());
  for (const auto& [k, p] : keywords) out.push_back(k);
  return out;
}

KeywordSet& KeywordLexicon::class_set(const std::string& event_class) {
  auto& s = class_sets[event_class];
  s.key = event_class;
  s.language = language;
  return s;
}

KeywordSet& KeywordLexicon::location_set(const std::string& country) {
  auto& s = location_sets[country];
  s.key = country;
  s.language = language;
  return s;
}

std::size_t KeywordLexicon::keyword_count() const {
  std::size_t n = 0;
  for (const auto& [k, s] : class_sets) n += s.size();
  for (const auto& [k, s] : location_sets) n += s.size();
  return n;
}

// --- Gazetteer -------------------------------------------------------------

namespace {

std::string resolve_code(const std::string& raw, const CountryTable& table, std::string_view file,
                         std::size_t line) {
  auto code = table.resolve(raw);
  if (!code) {
    throw Error(ErrorCode::kSchema, std::string(file) + ":" + std::to_string(line) +
                                        ": unknown country '" + raw + "'");
  }
  return *code;
}

}  // namespace

struct GazetteerBuilder {
  static Gazetteer build(const csv::Table& info, const csv::Table& admin1,
                         const csv::Table& cities, const CountryTable& table);
};

Gazetteer Gazetteer::load(const std::string& country_info, const std::string& admin1,
                          const std::string& cities, const CountryTable& table) {
  return GazetteerBuilder::build(csv::read_file(country_info), csv::read_file(admin1),
                                 csv::read_file(cities), table);
}

Gazetteer Gazetteer::parse(std::string_view country_info, std::string_view admin1,
                           std::string_view cities, const CountryTable& table) {
  return GazetteerBuilder::build(csv::read_string(country_info), csv::read_string(admin1),
                                 csv::read_string(cities), table);
}

Gazetteer GazetteerBuilder::build(const csv::Table& info, const csv::Table& admin1,
                                  const csv::Table& cities, const CountryTable& table) {
  Gazetteer g;
  auto& countries = g.countries_;
  auto& provinces = g.admin1_;
  auto& city_list = g.cities_;

  {
    const auto code = info.require_column("alpha3", "country info");
    const auto name = info.require_column("name", "country info");
    const auto dem = info.column("demonyms");
    const auto alt = info.column("alt_names");
    for (std::size_t i = 0; i < info.rows.size(); ++i) {
      const auto& row = info.rows[i];
      GazetteerCountry c;
      c.name = std::string(text::trim(row[name]));
      if (dem) c.demonyms = csv::split(row[*dem], ';');
      if (alt) c.alt_names = csv::split(row[*alt], ';');
      countries[resolve_code(row[code], table, "country info", info.lines[i])] = std::move(c);
    }
  }
  {
    const auto code = admin1.require_column("alpha3", "admin1");
    const auto name = admin1.require_column("admin1", "admin1");
    for (std::size_t i = 0; i < admin1.rows.size(); ++i) {
      const auto& row = admin1.rows[i];
      const auto n = text::trim(row[name]);
      if (n.empty()) continue;
      provinces.emplace(resolve_code(row[code], table, "admin1", admin1.lines[i]), std::string(n));
    }
  }
  {
    const auto name = cities.require_column("city", "cities");
    const auto code = cities.require_column("alpha3", "cities");
    const auto pop = cities.require_column("population", "cities");
    for (std::size_t i = 0; i < cities.rows.size(); ++i) {
      const auto& row = cities.rows[i];
      GazetteerCity c;
      c.name = std::string(text::trim(row[name]));
      c.country = resolve_code(row[code], table, "cities", cities.lines[i]);
      try {
        c.population = std::stoll(std::string(text::trim(row[pop])));
      } catch (const std::exception&) {
        throw Error(ErrorCode::kSchema,
                    "cities:" + std::to_string(cities.lines[i]) + ": bad population '" + row[pop] + "'");
      }
      city_list.push_back(std::move(c));
    }
  }
  return g;
}

std::vector<const GazetteerCity*> Gazetteer::top_cities(std::size_t n) const {
  std::vector<const GazetteerCity*> all;
  all.reserve(cities_.size());
  for (const auto& c : cities_) all.push_back(&c);
  std::sort(all.begin(), all.end(), [](const GazetteerCity* a, const GazetteerCity* b) {
    if (a->population != b->population) return a->population > b->population;
    if (a->name != b->name) return a->name < b->name;
    return a->country < b->country;
  });
  if (all.size() > n) all.resize(n);
  return all;
}

KeywordSet build_location_set(const std::string& country, const Gazetteer& gazetteer,
                              const std::string& language, std::size_t top_cities) {
  KeywordSet set = build_country_name_set(country, gazetteer, language);
  const auto& info = gazetteer.countries().at(country);
  for (const auto& d : info.demonyms) set.add(d, Provenance::kGazetteer);
  for (const auto& a : info.alt_names) set.add(a, Provenance::kGazetteer);
  auto [b, e] = gazetteer.admin1().equal_range(country);
  for (auto it = b; it != e; ++it) set.add(it->second, Provenance::kGazetteer);
  for (const auto* city : gazetteer.top_cities(top_cities)) {
    if (city->country == country) set.add(city->name, Provenance::kGazetteer);
  }
  return set;
}

KeywordSet build_country_name_set(const std::string& country, const Gazetteer& gazetteer,
                                  const std::string& language) {
  auto it = gazetteer.countries().find(country);
  if (it == gazetteer.countries().end()) {
    throw Error(ErrorCode::kNotFound, "country " + country + " not in gazetteer");
  }
  KeywordSet set;
  set.key = country;
  set.language = language;
  set.add(it->second.name, Provenance::kGazetteer);
  return set;
}

// --- Class sets ------------------------------------------------------------

AffixRules AffixRules::from_json(const nlohmann::json& j) {
  try {
    AffixRules r;
    r.language = j.at("language").get<std::string>();
    r.strip_suffixes = j.value("strip_suffixes", std::vector<std::string>{});
    r.affixes = j.value("affixes", std::vector<std::string>{""});
    r.min_stem = j.value("min_stem", std::size_t{3});
    std::stable_sort(r.strip_suffixes.begin(), r.strip_suffixes.end(),
                     [](const std::string& a, const std::string& b) { return a.size() > b.size(); });
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchema, std::string("bad affix rules: ") + e.what());
  }
}

AffixRules AffixRules::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open affix rules " + path);
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kSchema, path + ": " + e.what());
  }
}

AffixRules AffixRules::builtin(const std::string& language) {
  return from_json(
      nlohmann::json::parse(embedded_data("lexicon/" + language + "/affixes.json")));
}

std::string light_stem(std::string_view word, const AffixRules& rules) {
  const std::string w = text::normalize_match(word);
  for (const auto& suffix : rules.strip_suffixes) {
    if (suffix.empty() || w.size() < suffix.size() + rules.min_stem) continue;
    if (w.compare(w.size() - suffix.size(), suffix.size(), suffix) == 0) {
      return w.substr(0, w.size() - suffix.size());
    }
  }
  return w;
}

KeywordSet build_class_set(const std::string& event_class, const std::string& language,
                           const std::vector<std::string>& base_words, const AffixRules& rules,
                           Provenance provenance) {
  KeywordSet set;
  set.key = event_class;
  set.language = language;
  for (const auto& w : base_words) {
    set.add(w, provenance);
    const std::string stem = light_stem(w, rules);
    for (const auto& affix : rules.affixes) set.add(stem + affix, provenance);
  }
  return set;
}

std::map<std::string, std::vector<std::string>> parse_wordlist(std::string_view content) {
  const auto t = csv::read_string(content);
  const auto cls = t.require_column("class", "wordlist");
  const auto word = t.require_column("word", "wordlist");
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& row : t.rows) {
    const auto w = text::trim(row[word]);
    if (w.empty()) continue;
    out[EventClass(row[cls]).name()].emplace_back(w);
  }
  return out;
}

std::map<std::string, std::vector<std::string>> load_wordlist(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open wordlist " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_wordlist(ss.str());
}

std::size_t add_extra_keywords(KeywordLexicon& lexicon, const std::string& path) {
  const auto t = csv::read_file(path);
  const auto kind = t.require_column("kind", path);
  const auto key = t.require_column("key", path);
  const auto kw = t.require_column("keyword", path);
  std::size_t added = 0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    const std::string k(text::trim(row[key]));
    if (row[kind] == "class") {
      added += lexicon.class_set(EventClass(k).name()).add(row[kw], Provenance::kManual);
    } else if (row[kind] == "location") {
      added += lexicon.location_set(k).add(row[kw], Provenance::kManual);
    } else {
      throw Error(ErrorCode::kSchema, path + ":" + std::to_string(t.lines[i]) +
                                          ": kind must be class or location");
    }
  }
  return added;
}

// --- Vote expansion --------------------------------------------------------

std::size_t vote_quorum(double threshold, std::size_t runs) {
  // The epsilon absorbs representation error such as 0.3 * 10 = 3.0000000000000004.
  const double q = std::ceil(threshold * static_cast<double>(runs) - 1e-9);
  return q <= 0 ? 0 : static_cast<std::size_t>(q);
}

std::vector<std::string> vote_expand(const KeywordSet& existing,
                                     const std::vector<std::vector<std::string>>& runs,
                                     double threshold) {
  if (runs.empty()) return {};
  std::map<std::string, std::size_t> votes;
  for (const auto& run : runs) {
    std::set<std::string> seen;
    for (const auto& c : run) {
      auto k = text::normalize_match(c);
      if (!k.empty()) seen.insert(std::move(k));
    }
    for (const auto& k : seen) ++votes[k];
  }
  const std::size_t quorum = vote_quorum(threshold, runs.size());
  std::vector<std::string> accepted;
  for (const auto& [k, n] : votes) {
    if (n >= quorum && !existing.keywords.count(k)) accepted.push_back(k);
  }
  return accepted;
}

std::string LlmKeywordSampler::prompt(const std::string& display_name, bool is_location) const {
  std::string p;
  if (is_location) {
    p = "List place names, demonyms, regions, and cities that news articles written in language '" +
        language_ + "' would use to indicate a location in " + display_name + ".";
  } else {
    p = "List synonyms and hyponyms of the event type '" + display_name +
        "' as they would appear in news articles written in language '" + language_ + "'.";
  }
  p += " Answer with a comma-separated list of words or short phrases only.";
  return p;
}

std::vector<std::string> LlmKeywordSampler::sample(const std::string& display_name,
                                                   bool is_location, std::size_t) {
  return parse_keyword_list(client_.complete({prompt(display_name, is_location), temperature_}));
}

std::vector<std::string> parse_keyword_list(std::string_view answer) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    auto t = text::trim(cur);
    // Strip list markers such as "-", "*", "1.", "2)".
    while (!t.empty() && (t.front() == '-' || t.front() == '*' || t.front() == '\xE2')) {
      if (t.front() == '\xE2' && t.size() >= 3) t.remove_prefix(3);  // bullet U+2022
      else t.remove_prefix(1);
      t = text::trim(t);
    }
    std::size_t d = 0;
    while (d < t.size() && t[d] >= '0' && t[d] <= '9') ++d;
    if (d > 0 && d < t.size() && (t[d] == '.' || t[d] == ')')) t = text::trim(t.substr(d + 1));
    while (!t.empty() && (t.back() == '.' || t.back() == ';')) t.remove_suffix(1);
    if (!t.empty()) out.emplace_back(t);
    cur.clear();
  };
  for (char c : answer) {
    if (c == ',' || c == '\n' || c == ';') {
      flush();
    } else {
      cur.push_back(c);
    }
  }
  flush();
  return out;
}

std::vector<std::vector<std::string>> collect_runs(KeywordSampler& sampler,
                                                   const std::string& display_name,
                                                   bool is_location, std::size_t runs, int jobs) {
  std::vector<std::vector<std::string>> out(runs);
  parallel_chunks(runs, jobs, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) out[i] = sampler.sample(display_name, is_location, i);
  });
  return out;
}

// --- Persistence -----------------------------------------------------------

namespace {

nlohmann::json set_to_json(const KeywordSet& s) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [kw, prov] : s.keywords) {
    arr.push_back({{"kw", kw}, {"prov", std::string(to_string(prov))}});
  }
  return arr;
}

void set_from_json(KeywordSet& s, const nlohmann::json& arr) {
  if (!arr.is_array()) throw Error(ErrorCode::kSchema, "keyword list for '" + s.key + "' is not an array");
  for (const auto& e : arr) {
    if (!e.is_object() || !e.contains("kw") || !e["kw"].is_string()) {
      throw Error(ErrorCode::kSchema, "keyword entry under '" + s.key + "' lacks a string 'kw'");
    }
    const Provenance p = parse_provenance(e.value("prov", std::string("manual")));
    s.add(e["kw"].get<std::string>(), p);
  }
}

}  // namespace

nlohmann::json lexicon_to_json(const KeywordLexicon& lex) {
  nlohmann::json j;
  j["language"] = lex.language;
  j["classes"] = nlohmann::json::object();
  for (const auto& [k, s] : lex.class_sets) j["classes"][k] = set_to_json(s);
  j["locations"] = nlohmann::json::object();
  for (const auto& [k, s] : lex.location_sets) j["locations"][k] = set_to_json(s);
  return j;
}

KeywordLexicon lexicon_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("language") || !j["language"].is_string()) {
    throw Error(ErrorCode::kSchema, "lexicon JSON lacks a string 'language'");
  }
  KeywordLexicon lex;
  lex.language = j["language"].get<std::string>();
  for (const char* section : {"classes", "locations"}) {
    if (!j.contains(section)) continue;
    if (!j[section].is_object()) {
      throw Error(ErrorCode::kSchema, std::string("lexicon '") + section + "' is not an object");
    }
    const bool is_class = std::string_view(section) == "classes";
    for (auto it = j[section].begin(); it != j[section].end(); ++it) {
      KeywordSet& s = is_class ? lex.class_set(it.key()) : lex.location_set(it.key());
      set_from_json(s, it.value());
    }
  }
  return lex;
}

void save_lexicon(const KeywordLexicon& lexicon, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kNotFound, "cannot write lexicon " + path);
  out << lexicon_to_json(lexicon).dump(1) << '\n';
}

KeywordLexicon load_lexicon(const std::string& path, const std::optional<LexiconUniverse>& universe,
                            std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open lexicon " + path, {{"path", path}});
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kSchema, path + ": " + e.what());
  }
  KeywordLexicon lex = lexicon_from_json(j);
  std::vector<std::string> notes;
  auto check = [&](const std::string& key, bool is_class) {
    KeywordSet& s = is_class ? lex.class_set(key) : lex.location_set(key);
    if (s.empty()) {
      notes.push_back(std::string(is_class ? "class" : "location") + " '" + key + "' has no keywords");
    }
  };
  if (universe) {
    for (const auto& c : universe->classes) check(c, true);
    for (const auto& c : universe->countries) check(c, false);
  } else {
    for (auto& [k, s] : lex.class_sets) {
      if (s.empty()) notes.push_back("class '" + k + "' has no keywords");
    }
    for (auto& [k, s] : lex.location_sets) {
      if (s.empty()) notes.push_back("location '" + k + "' has no keywords");
    }
  }
  for (const auto& n : notes) log::warn("lexicon_empty_set", {{"path", path}, {"detail", n}});
  if (warnings) warnings->insert(warnings->end(), notes.begin(), notes.end());
  return lex;
}

}  // namespace fame
