// Writes the synthetic end-to-end fixture: a gazetteer, 12 events, a
// 1,000-article corpus in two shards, an English lexicon, a scripted mock
// LLM, gold labels, the oracle's phase-one pairs, and the keep-set the
// script implies.
//
//   fame_make_golden <out_dir>
//
// Every article is generated with a known role for a known event, so gold
// labels come from construction rather than from any library run. Phase-one
// pairs come from the naive triple-rule oracle.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fame/csv.hpp"
#include "fame/embedded.hpp"
#include "fame/lexicon.hpp"
#include "fame/llm_filter.hpp"
#include "oracles.hpp"

namespace {

using Rng = std::mt19937_64;
namespace fs = std::filesystem;

std::size_t uniform(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

template <class T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[uniform(rng, 0, v.size() - 1)];
}

struct Place {
  std::string code, name, demonym;
  std::vector<std::string> regions, cities;
};

const std::vector<Place>& places() {
  static const std::vector<Place> p = {
      {"IND", "India", "Indian", {"West Bengal", "Odisha", "Assam", "Kerala"}, {"Kolkata", "Mumbai", "Chennai"}},
      {"USA", "United States", "American", {"California", "Texas", "Louisiana", "Oregon"},
       {"Los Angeles", "Houston", "Portland", "Minneapolis"}},
      {"GBR", "United Kingdom", "British", {"England", "Scotland", "Wales"}, {"London", "Manchester", "Glasgow"}},
      {"KEN", "Kenya", "Kenyan", {"Nairobi County", "Kisumu County"}, {"Nairobi", "Mombasa", "Kisumu"}},
      {"JPN", "Japan", "Japanese", {"Hokkaido", "Kagoshima"}, {"Tokyo", "Osaka", "Sapporo"}},
      {"BRA", "Brazil", "Brazilian", {"Bahia", "Minas Gerais"}, {"São Paulo", "Belo Horizonte", "Salvador"}},
  };
  return p;
}

const Place& place(const std::string& code) {
  for (const auto& p : places()) {
    if (p.code == code) return p;
  }
  throw std::runtime_error("unknown place " + code);
}

struct Event {
  std::string id, cls, country, date;
  std::string deaths, casualties, source;
  int relevant;     // on-topic articles inside the window with a location keyword
  int figurative;   // class word used figuratively next to a location
  int mislabeled;   // relevant articles the mock wrongly rejects
  int fooled;       // figurative articles the mock wrongly accepts
  int hedged;       // relevant articles that get a non-answer
};

const std::vector<Event>& events() {
  static const std::vector<Event> e = {
      {"E01", "storm", "IND", "2020-05-20", "90", "", "EMDAT", 31, 4, 2, 1, 1},
      {"E02", "flood", "IND", "2020-07-10", "30", "", "EMDAT", 12, 3, 1, 0, 0},
      {"E03", "earthquake", "JPN", "2020-02-13", "1", "", "USGS", 6, 2, 0, 1, 0},
      {"E04", "wildfire", "USA", "2020-09-08", "31", "", "EMDAT", 18, 3, 1, 0, 1},
      {"E05", "storm", "USA", "2020-08-27", "40", "", "EMDAT", 18, 5, 0, 1, 0},
      {"E06", "attack", "KEN", "2020-01-05", "3", "5", "GTD", 7, 1, 1, 0, 0},
      {"E07", "flood", "KEN", "2020-04-29", "194", "", "EMDAT", 9, 2, 0, 0, 1},
      {"E08", "landslide", "BRA", "2020-03-03", "", "", "EMDAT", 5, 1, 0, 0, 0},
      {"E09", "attack", "GBR", "2020-02-02", "0", "3", "GTD", 4, 2, 0, 1, 0},
      {"E10", "attack", "USA", "2020-05-29", "1", "2", "GTD", 10, 3, 1, 0, 0},
      {"E11", "attack", "USA", "2020-05-29", "1", "1", "GTD", 0, 0, 0, 0, 0},
      {"E12", "volcano", "JPN", "2020-06-15", "0", "", "EMDAT", 0, 3, 0, 0, 0},
  };
  return e;
}

const std::map<std::string, std::vector<std::string>>& class_terms() {
  static const std::map<std::string, std::vector<std::string>> t = {
      {"storm", {"cyclone", "storm", "hurricane", "tropical storm"}},
      {"flood", {"floods", "flooding", "flash flood"}},
      {"earthquake", {"earthquake", "quake", "tremor"}},
      {"wildfire", {"wildfire", "wildfires", "blaze", "forest fire"}},
      {"attack", {"shooting", "gunman", "stabbing", "attack"}},
      {"landslide", {"landslide", "mudslide"}},
      {"volcano", {"eruption", "volcano"}},
  };
  return t;
}

const std::vector<std::string>& figurative_titles() {
  static const std::vector<std::string> t = {
      "{term} of criticism hits {loc} ministers",      "{Loc} markets weather a {term} of selling",
      "Star striker sparks {term} of joy in {loc}",     "{Loc} startup rides a {term} of orders",
      "Opinion: the {term} of rumours in {loc} politics", "{Loc} film draws a {term} of fans",
  };
  return t;
}

const std::vector<std::string>& neutral_titles() {
  static const std::vector<std::string> t = {
      "Central bank holds rates steady",      "New museum wing opens to visitors",
      "Local team wins league title",         "Tech firm reports quarterly earnings",
      "City council approves transit budget", "Farmers expect strong harvest",
      "Chess prodigy takes national crown",   "Airline adds routes for summer",
      "Researchers publish study on sleep",   "Festival returns after a break",
  };
  return t;
}

const std::vector<std::string>& neutral_sentences() {
  static const std::vector<std::string> s = {
      "Analysts said the outlook remains mixed.",   "The announcement came late on Tuesday.",
      "Officials expect further updates next week.", "Prices rose slightly over the month.",
      "The event drew a large crowd.",              "Organizers thanked volunteers for their help.",
      "Several lawmakers welcomed the decision.",   "The company declined to comment further.",
  };
  return s;
}

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (auto p = s.find(from); p != std::string::npos; p = s.find(from, p + to.size())) s.replace(p, from.size(), to);
  return s;
}

std::string cap(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

std::string location_mention(Rng& rng, const Place& p) {
  switch (uniform(rng, 0, 3)) {
    case 0: return p.name;
    case 1: return pick(rng, p.regions);
    case 2: return pick(rng, p.cities);
    default: return p.demonym;
  }
}

struct Generated {
  fame::Article article;
  std::string event_id;  // empty for noise
  std::string role;      // relevant, figurative, late, unlocated, noise
};

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: fame_make_golden <out_dir>\n";
    return 2;
  }
  const fs::path out = argv[1];
  fs::create_directories(out / "gazetteer");
  fs::create_directories(out / "corpus");
  Rng rng(20200520);

  // Gazetteer.
  std::ostringstream ci, ad, ct;
  ci << "alpha3,name,demonyms,alt_names\n";
  ad << "alpha3,admin1\n";
  ct << "city,alpha3,population\n";
  for (const auto& p : places()) {
    ci << p.code << ',' << p.name << ',' << p.demonym << ",\n";
    for (const auto& r : p.regions) ad << p.code << ',' << r << '\n';
    std::int64_t pop = 9000000;
    for (const auto& c : p.cities) ct << c << ',' << p.code << ',' << (pop -= 1500000) << '\n';
  }
  // A small town below the top-cities cutoff used by the lexicon build.
  ct << "Hamlet Bay,GBR,900\n";
  std::ofstream(out / "gazetteer/country_info.csv") << ci.str();
  std::ofstream(out / "gazetteer/admin1.csv") << ad.str();
  std::ofstream(out / "gazetteer/cities.csv") << ct.str();

  // Lexicon, the same way `fame lexicon` builds it.
  const auto gaz = fame::Gazetteer::parse(ci.str(), ad.str(), ct.str());
  fame::KeywordLexicon lex;
  lex.language = "en";
  const auto rules = fame::AffixRules::builtin("en");
  for (const auto& [cls, words] : fame::parse_wordlist(fame::embedded_data("lexicon/en/classes.csv"))) {
    lex.class_sets[cls] = fame::build_class_set(cls, "en", words, rules);
  }
  for (const auto& p : places()) lex.location_sets[p.code] = fame::build_location_set(p.code, gaz, "en", 18);
  fame::save_lexicon(lex, (out / "lexicon_en.json").string());
  for (const auto& [cls, terms] : class_terms()) {
    for (const auto& t : terms) {
      if (!lex.class_sets.at(cls).contains(t)) throw std::runtime_error("term not in lexicon: " + t);
    }
  }

  // Events.
  {
    std::ofstream ev(out / "events.csv");
    ev << "id,class,country,start_date,deaths,casualties,source\n";
    for (const auto& e : events()) {
      ev << e.id << ',' << e.cls << ',' << e.country << ',' << e.date << ',' << e.deaths << ',' << e.casualties
         << ',' << e.source << '\n';
    }
  }

  // Articles.
  const std::vector<std::string> reporters = {"USA", "GBR", "IND", "KEN"};
  std::vector<Generated> gen;
  std::size_t serial = 0;
  auto make = [&](const std::string& lang, fame::Date date, std::string title, std::string body) {
    fame::Article a;
    a.id = "art-" + std::to_string(1000 + serial);
    a.language = lang;
    a.publish_date = date;
    // Unique titles let the mock script address one article.
    a.title = title + " (" + std::to_string(1000 + serial) + ")";
    a.body = std::move(body);
    const auto r = uniform(rng, 0, 9);
    if (r < 9) a.outlet_country = reporters[r % reporters.size()];
    a.url = "https://news" + std::to_string(r) + ".example/" + a.id;
    ++serial;
    return a;
  };
  auto neutral_body = [&](std::size_t n) {
    std::string b;
    for (std::size_t i = 0; i < n; ++i) b += (b.empty() ? "" : " ") + pick(rng, neutral_sentences());
    return b;
  };
  for (const auto& e : events()) {
    const auto d = fame::Date::parse_or_throw(e.date);
    const Place& p = place(e.country);
    const auto& terms = class_terms().at(e.cls);
    for (int i = 0; i < e.relevant; ++i) {
      const std::string term = pick(rng, terms);
      const std::string loc = location_mention(rng, p);
      std::string title = cap(term) + " toll rises in " + loc;
      if (i % 3 == 1) title = cap(loc) + " reels after deadly " + term;
      if (i % 3 == 2) title = "Rescuers search for survivors of " + term + " in " + loc;
      const std::string body = "Emergency crews worked through the night near " + pick(rng, p.cities) + ". The " +
                               term + " destroyed homes and cut power. " + neutral_body(2);
      gen.push_back({make("en", d + static_cast<int>(uniform(rng, 0, 7)), title, body), e.id, "relevant"});
    }
    for (int i = 0; i < e.figurative; ++i) {
      const std::string loc = location_mention(rng, p);
      std::string title = replace_all(pick(rng, figurative_titles()), "{term}", pick(rng, terms));
      title = cap(replace_all(replace_all(title, "{Loc}", loc), "{loc}", loc));
      gen.push_back(
          {make("en", d + static_cast<int>(uniform(rng, 0, 7)), title, neutral_body(3)), e.id, "figurative"});
    }
    // Outside the window, and on topic but with no location keyword: both are
    // misses of phase one by construction.
    for (int i = 0; i < 2 && e.relevant > 0; ++i) {
      const std::string term = pick(rng, terms);
      gen.push_back({make("en", d + 9 + i * 5, "Months on, " + term + " survivors in " + p.name + " rebuild",
                          neutral_body(2)),
                     e.id, "late"});
      gen.push_back({make("en", d + static_cast<int>(uniform(rng, 0, 7)),
                          cap(term) + " leaves thousands homeless", neutral_body(2)),
                     e.id, "unlocated"});
    }
  }
  // French articles: the run has no French lexicon, so they never link.
  for (int i = 0; i < 40; ++i) {
    gen.push_back({make("fr", fame::Date::from_ymd(2020, 5, 20) + i,
                        "Une tempête frappe l'Inde", "Le cyclone a touché Calcutta. Les secours sont mobilisés."),
                   "", "noise"});
  }
  while (gen.size() < 1000) {
    const auto date = fame::Date::from_ymd(2020, 1, 1) + static_cast<int>(uniform(rng, 0, 365));
    std::string title = pick(rng, neutral_titles());
    if (uniform(rng, 0, 3) == 0) title += " in " + location_mention(rng, pick(rng, places()));
    gen.push_back({make("en", date, title, neutral_body(uniform(rng, 1, 4))), "", "noise"});
  }
  std::shuffle(gen.begin(), gen.end(), rng);
  {
    std::ofstream s0(out / "corpus/shard-000.jsonl"), s1(out / "corpus/shard-001.jsonl");
    for (std::size_t i = 0; i < gen.size(); ++i) {
      (i < gen.size() / 2 ? s0 : s1) << fame::article_to_json(gen[i].article).dump() << '\n';
    }
  }

  // Phase-one pairs from the naive oracle.
  std::vector<fame::Article> arts;
  std::map<std::string, const Generated*> by_id;
  for (const auto& g : gen) {
    arts.push_back(g.article);
    by_id[g.article.id] = &g;
  }
  const auto corpus = fame::Corpus::build(std::move(arts));
  const auto store = fame::load_events((out / "events.csv").string(), fame::EventFileFormat::kCsv).store;
  const auto phase1 =
      fame::oracle::phase_one(store, corpus, {lex}, fame::MatchScope::kTitlePlusBody, 7, 0);

  {
    std::ofstream p1(out / "expected_phase1.csv");
    p1 << "event_id,article_id\n";
    for (const auto& e : events()) {
      for (const auto& aid : phase1.at(e.id)) p1 << e.id << ',' << aid << '\n';
    }
  }

  // Mock answers and labels. Collision twins E10/E11 share one prompt per
  // article, so both get E10's ground truth.
  const auto tmpl = fame::PromptTemplate::builtin(fame::PromptVariant::kSimple);
  std::ofstream mock(out / "mock.jsonl"), labels(out / "labels.csv"), keep(out / "expected_phase2.csv");
  labels << "event_id,article_id,label\n";
  keep << "event_id,article_id\n";
  std::map<std::string, std::map<std::string, int>> used;  // event → role → count
  std::map<std::pair<std::string, std::string>, std::string> scripted;  // (title, question) → answer
  for (const auto& e : events()) {
    const auto* rec = store.find(e.id);
    const std::string question =
        tmpl.question(rec->fingerprint.event_class.name(), fame::CountryTable::builtin().display_name(e.country));
    const std::string owner = e.id == "E11" ? "E10" : e.id;
    const Event* oe = nullptr;
    for (const auto& x : events()) {
      if (x.id == owner) oe = &x;
    }
    for (const auto& aid : phase1.at(e.id)) {
      const Generated& g = *by_id.at(aid);
      const bool truth = g.event_id == owner && g.role == "relevant";
      const auto key = std::make_pair(g.article.title, question);
      auto known = scripted.find(key);
      if (known == scripted.end()) {
        std::string answer = truth ? "Yes, the text reports on it." : "No.";
        int& n = used[e.id][g.role];
        if (truth && n < oe->mislabeled) answer = "No, it does not.";
        else if (truth && n < oe->mislabeled + oe->hedged) answer = "The text mentions damage.";
        else if (!truth && g.role == "figurative" && n < oe->fooled) answer = "Yes.";
        ++n;
        known = scripted.emplace(key, answer).first;
        mock << nlohmann::json{{"contains", {g.article.title, question}}, {"answer", answer}}.dump() << '\n';
      }
      const bool keeps = known->second.rfind("Yes", 0) == 0;
      labels << e.id << ',' << aid << ',' << (truth ? "positive" : "negative") << '\n';
      if (keeps) keep << e.id << ',' << aid << '\n';
    }
  }
  mock << nlohmann::json{{"default", "No"}}.dump() << '\n';
  std::cout << "wrote fixture to " << out << '\n';
  return 0;
}
