#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "fame/country_table.hpp"
#include "fame/text.hpp"

namespace fame::fixture {
namespace {

using Rng = std::mt19937_64;

std::size_t uniform(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

bool chance(Rng& rng, double p) { return std::uniform_real_distribution<double>(0, 1)(rng) < p; }

std::size_t log_uniform(Rng& rng, std::size_t lo, std::size_t hi) {
  const double a = std::log(static_cast<double>(lo)), b = std::log(static_cast<double>(hi) + 1);
  const double v = std::exp(std::uniform_real_distribution<double>(a, b)(rng));
  return std::clamp(static_cast<std::size_t>(v), lo, hi);
}

template <class T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[uniform(rng, 0, v.size() - 1)];
}

const std::vector<std::string>& unicode_words() {
  static const std::vector<std::string> w = {"café", "niño", "über", "zürich", "été", "straße", "año", "ångström",
                                             "łódź", "smørrebrød", "naïve", "señal"};
  return w;
}

std::string decorate_case(Rng& rng, const std::string& w) {
  const auto r = uniform(rng, 0, 5);
  std::string out = w;
  if (r == 0) {
    for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  } else if (r == 1 && !out.empty()) {
    out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  }
  return out;
}

// A planted keyword with a random left and right neighbor: word glue makes
// the occurrence unbounded, punctuation and spaces keep it bounded.
std::string plant(Rng& rng, const std::string& kw) {
  static const std::vector<std::string> left = {"", "", "", "(", "\"", "-", "x", "9", "é", "'"};
  static const std::vector<std::string> right = {"", "", "", ",", ".", "'s", "s", "es", "-led", "ing", "7", "ñ", ")"};
  return pick(rng, left) + decorate_case(rng, kw) + pick(rng, right);
}

std::vector<std::string> make_vocab(Rng& rng, std::size_t n) {
  std::vector<std::string> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(pseudo_word(rng));
  return v;
}

std::string make_keyword(Rng& rng, const std::vector<std::string>& vocab, const std::vector<std::string>& existing) {
  const auto r = uniform(rng, 0, 9);
  if (r == 0 && !existing.empty()) return pick(rng, existing) + "s";       // plural of another keyword
  if (r == 1 && !existing.empty()) {                                          // prefix of another keyword
    const auto& e = pick(rng, existing);
    const auto sp = e.find(' ');
    if (sp != std::string::npos) return e.substr(0, sp);
  }
  if (r == 2) return pick(rng, unicode_words());
  const auto words = uniform(rng, 1, 3);
  std::string kw = pick(rng, vocab);
  for (std::size_t i = 1; i < words; ++i) kw += " " + pick(rng, vocab);
  return kw;
}

}  // namespace

std::string pseudo_word(std::mt19937_64& rng) {
  static const std::string consonants = "bcdfghjklmnprstvwz";
  static const std::string vowels = "aeiou";
  const auto len = uniform(rng, 3, 9);
  std::string w;
  for (std::size_t i = 0; i < len; ++i) {
    const std::string& pool = (i % 2 == 0) ? consonants : vowels;
    w += pool[uniform(rng, 0, pool.size() - 1)];
  }
  return w;
}

MatcherFixture random_matcher_fixture(std::uint64_t seed, const MatcherSpec& spec) {
  Rng rng(seed);
  MatcherFixture fx;
  const std::size_t n_articles =
      spec.log_uniform_sizes ? log_uniform(rng, 1, spec.max_articles) : spec.max_articles;
  const std::size_t n_keywords =
      spec.log_uniform_sizes ? log_uniform(rng, 8, spec.max_keywords) : spec.max_keywords;
  const std::size_t n_events = chance(rng, 0.03) ? 0
                               : spec.log_uniform_sizes ? log_uniform(rng, 1, spec.max_events)
                                                        : spec.max_events;

  std::vector<std::string> languages = {"en"};
  if (chance(rng, 0.4)) languages.push_back("fr");

  std::vector<std::string> classes = builtin_event_classes();
  std::shuffle(classes.begin(), classes.end(), rng);
  classes.resize(uniform(rng, 2, 5));
  std::vector<std::string> countries;
  const auto& table = CountryTable::builtin().countries();
  const std::size_t n_countries = uniform(rng, 2, 8);
  while (countries.size() < n_countries) {
    const auto& c = pick(rng, table).alpha3;
    if (std::find(countries.begin(), countries.end(), c) == countries.end()) countries.push_back(c);
  }

  // A small shared vocabulary so keyword words also appear as filler.
  const auto vocab = make_vocab(rng, 150 + n_keywords / 4);
  const std::size_t sets = languages.size() * (classes.size() + countries.size());
  std::vector<std::string> all_keywords;
  for (const auto& lang : languages) {
    KeywordLexicon lex;
    lex.language = lang;
    auto fill = [&](KeywordSet& set) {
      if (chance(rng, 0.05)) return;  // empty set
      const std::size_t quota = std::max<std::size_t>(1, n_keywords / sets + uniform(rng, 0, 2));
      for (std::size_t i = 0; i < quota; ++i) {
        // Some keywords are shared between sets so one hit carries two tags.
        const std::string kw = (chance(rng, 0.05) && !all_keywords.empty()) ? pick(rng, all_keywords)
                                                                              : make_keyword(rng, vocab, all_keywords);
        if (set.add(kw, Provenance::kManual)) all_keywords.push_back(text::normalize_match(kw));
      }
    };
    for (const auto& c : classes) fill(lex.class_set(c));
    for (const auto& c : countries) fill(lex.location_set(c));
    fx.keywords += lex.keyword_count();
    fx.lexicons.push_back(std::move(lex));
  }

  const Date base = Date::from_ymd(2020, 1, 1);
  std::vector<std::string> article_langs = languages;
  article_langs.push_back("de");  // no lexicon: never matched
  std::vector<Article> articles;
  auto filler = [&](std::size_t lang_index) {
    if (chance(rng, 0.12) && !all_keywords.empty()) {
      // Usually a keyword of the article's own language.
      const auto& lex = fx.lexicons[std::min(lang_index, fx.lexicons.size() - 1)];
      const auto& group = chance(rng, 0.5) ? lex.class_sets : lex.location_sets;
      auto it = group.begin();
      std::advance(it, static_cast<long>(uniform(rng, 0, group.size() - 1)));
      if (!it->second.empty()) {
        const auto words = it->second.words();
        return plant(rng, pick(rng, words));
      }
      return plant(rng, pick(rng, all_keywords));
    }
    return decorate_case(rng, pick(rng, vocab));
  };
  for (std::size_t i = 0; i < n_articles; ++i) {
    Article a;
    a.id = "a" + std::to_string(i);
    const std::size_t li = uniform(rng, 0, article_langs.size() - 1);
    a.language = article_langs[li];
    a.publish_date = base + static_cast<int>(uniform(rng, 0, 89));
    const auto title_len = uniform(rng, 2, 10);
    for (std::size_t t = 0; t < title_len; ++t) a.title += (t ? " " : "") + filler(li);
    const auto sentences = uniform(rng, 0, 8);
    for (std::size_t s = 0; s < sentences; ++s) {
      std::string sent;
      const auto len = uniform(rng, 3, 12);
      for (std::size_t t = 0; t < len; ++t) sent += (t ? " " : "") + filler(li);
      sent[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(sent[0])));
      a.body += (s ? " " : "") + sent + ".";
    }
    articles.push_back(std::move(a));
  }
  fx.corpus = Corpus::build(std::move(articles));

  std::vector<EventFingerprint> fps;
  for (std::size_t i = 0; i < n_events; ++i) {
    EventRecord r;
    r.id = "e" + std::to_string(i);
    if (!fps.empty() && chance(rng, 0.08)) {
      r.fingerprint = pick(rng, fps);
    } else {
      r.fingerprint = {EventClass(pick(rng, classes)), pick(rng, countries),
                       base + static_cast<int>(uniform(rng, 0, 105)) - 10};
    }
    fps.push_back(r.fingerprint);
    fx.events.add(std::move(r));
  }

  fx.options.scope = static_cast<MatchScope>(uniform(rng, 0, 2));
  fx.options.window_days = static_cast<int>(uniform(rng, 0, 10));
  fx.options.window_before_days = chance(rng, 0.3) ? static_cast<int>(uniform(rng, 1, 3)) : 0;
  fx.options.jobs = static_cast<int>(uniform(rng, 1, 4));
  return fx;
}

ThroughputFixture throughput_fixture(std::uint64_t seed, std::size_t n_articles, std::size_t patterns,
                                     std::size_t n_events, std::size_t words) {
  Rng rng(seed);
  ThroughputFixture fx;
  fx.lexicon.language = "en";
  const auto& classes = builtin_event_classes();
  std::vector<std::string> countries;
  for (const auto& c : CountryTable::builtin().countries()) {
    if (countries.size() < 40) countries.push_back(c.alpha3);
  }
  const auto vocab = make_vocab(rng, 6000);
  const auto keyword_vocab = make_vocab(rng, patterns);
  std::vector<std::string> planted;
  std::set<std::string> unique;
  for (std::size_t i = 0; unique.size() < patterns && i < 10 * patterns; ++i) {
    std::string kw = pick(rng, keyword_vocab);
    if (chance(rng, 0.3)) kw += " " + pick(rng, keyword_vocab);
    if (!unique.insert(kw).second) continue;
    // One keyword in five is a class keyword.
    KeywordSet& set = (i % 5 == 0) ? fx.lexicon.class_set(classes[(i / 5) % classes.size()])
                                   : fx.lexicon.location_set(countries[(i - i / 5 - 1) % countries.size()]);
    if (set.add(kw, Provenance::kManual)) planted.push_back(kw);
  }

  const Date base = Date::from_ymd(2020, 1, 1);
  const int days = 366;
  std::vector<Article> articles;
  articles.reserve(n_articles);
  for (std::size_t i = 0; i < n_articles; ++i) {
    Article a;
    a.id = "t" + std::to_string(i);
    a.language = "en";
    a.publish_date = base + static_cast<int>(uniform(rng, 0, days - 1));
    auto token = [&] { return chance(rng, 0.03) ? pick(rng, planted) : pick(rng, vocab); };
    for (int t = 0; t < 8; ++t) a.title += (t ? " " : "") + token();
    for (std::size_t t = 0; t < words; ++t) {
      a.body += (t ? " " : "") + token();
      if (t % 12 == 11) a.body += ".";
    }
    articles.push_back(std::move(a));
  }
  fx.corpus = Corpus::build(std::move(articles));

  fx.window_days = static_cast<int>((days + n_events - 1) / std::max<std::size_t>(1, n_events));
  for (std::size_t i = 0; i < n_events; ++i) {
    EventRecord r;
    r.id = "ev" + std::to_string(i);
    r.fingerprint = {EventClass(classes[i % classes.size()]), countries[i % countries.size()],
                     base + static_cast<int>(i) * fx.window_days};
    fx.events.add(std::move(r));
  }
  return fx;
}

}  // namespace fame::fixture
