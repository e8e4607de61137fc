#include "fame/attention.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "fame/csv.hpp"
#include "fame/error.hpp"
#include "fame/log.hpp"
#include "fame/parallel.hpp"
#include "fame/text.hpp"

namespace fame {

// --- Rankings --------------------------------------------------------------

std::vector<RankedEvent> rank_events(const LinkSet& links, const EventStore& events, std::size_t k,
                                     Phase phase) {
  std::vector<RankedEvent> rows;
  std::map<EventFingerprint, std::size_t> row_of;
  for (const auto& eid : links.event_ids()) {
    const EventRecord* rec = events.find(eid);
    if (!rec) throw Error(ErrorCode::kNotFound, "link set names unknown event '" + eid + "'");
    const EventLinks* l = links.find(eid);
    if (phase == Phase::kPhase2 && !l->phase2) {
      throw Error(ErrorCode::kInvalidArgument, "event '" + eid + "' has no phase-2 result");
    }
    auto [it, inserted] = row_of.emplace(rec->fingerprint, rows.size());
    if (inserted) {
      RankedEvent r;
      r.fingerprint = rec->fingerprint;
      rows.push_back(std::move(r));
    }
    RankedEvent& r = rows[it->second];
    r.event_ids.push_back(eid);
    // Members of a collision group share one article set; union guards
    // against hand-edited files.
    r.articles = std::max(r.articles, l->ids(phase).size());
    if (rec->deaths) r.deaths = r.deaths.value_or(0) + *rec->deaths;
  }
  std::sort(rows.begin(), rows.end(), [](const RankedEvent& a, const RankedEvent& b) {
    if (a.articles != b.articles) return a.articles > b.articles;
    if (a.fingerprint.date != b.fingerprint.date) return a.fingerprint.date < b.fingerprint.date;
    return a.event_ids.front() < b.event_ids.front();
  });
  if (k && rows.size() > k) rows.resize(k);
  return rows;
}

nlohmann::ordered_json ranking_to_json(const std::vector<RankedEvent>& ranking) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  std::size_t rank = 0;
  for (const auto& r : ranking) {
    nlohmann::ordered_json j = {{"rank", ++rank},
                                {"fingerprint", r.fingerprint.key()},
                                {"event_ids", r.event_ids},
                                {"articles", r.articles}};
    j["deaths"] = r.deaths ? nlohmann::ordered_json(*r.deaths) : nlohmann::ordered_json(nullptr);
    if (r.event_ids.size() > 1) j["collision"] = true;
    out.push_back(std::move(j));
  }
  return out;
}

void write_ranking_csv(const std::vector<RankedEvent>& ranking, std::ostream& out) {
  out << "rank,class,country,date,articles,deaths,event_ids\n";
  std::size_t rank = 0;
  for (const auto& r : ranking) {
    std::string ids;
    for (const auto& id : r.event_ids) ids += (ids.empty() ? "" : ";") + id;
    out << csv::join_row({std::to_string(++rank), r.fingerprint.event_class.name(), r.fingerprint.country,
                          r.fingerprint.date.iso(), std::to_string(r.articles),
                          r.deaths ? std::to_string(*r.deaths) : "", ids})
        << '\n';
  }
}

// --- Coverage --------------------------------------------------------------

const CoverageCell& CoverageMatrix::cell(const std::string& reporter, const std::string& event_country) const {
  auto it = cells.find({reporter, event_country});
  if (it == cells.end()) {
    throw Error(ErrorCode::kNotFound, "no coverage cell (" + reporter + ", " + event_country + ")");
  }
  return it->second;
}

CoverageMatrix coverage_matrix(const LinkSet& links, const EventStore& events, const Corpus& corpus,
                               const CoverageOptions& opt) {
  CoverageMatrix m;
  std::map<std::string, std::size_t> events_in;
  std::map<std::pair<std::string, std::string>, std::size_t> articles;
  for (const auto& r : events.records()) {
    if (events.ids_for(r.fingerprint).size() > 1) {
      ++m.collided_events_skipped;
      continue;
    }
    ++m.unique_events;
    ++events_in[r.fingerprint.country];
    const EventLinks* l = links.find(r.id);
    if (!l) continue;
    if (opt.phase == Phase::kPhase2 && !l->phase2) {
      throw Error(ErrorCode::kInvalidArgument, "event '" + r.id + "' has no phase-2 result");
    }
    for (const auto& aid : l->ids(opt.phase)) {
      const Article* a = corpus.find(aid);
      if (!a) throw Error(ErrorCode::kNotFound, "link set names unknown article '" + aid + "'");
      if (!a->outlet_country) {
        ++m.unknown_reporter_articles;
        continue;
      }
      ++articles[{*a->outlet_country, r.fingerprint.country}];
    }
  }
  if (m.unknown_reporter_articles) {
    log::warn("coverage.unknown_reporter", {{"articles", m.unknown_reporter_articles}});
  }
  for (const auto& [key, n] : articles) {
    if (n) ++m.reporter_country_counts[key.first];
  }
  for (const auto& [c, n] : events_in) m.event_countries.push_back(c);

  if (opt.reporters) {
    m.reporters = *opt.reporters;
    std::sort(m.reporters.begin(), m.reporters.end());
    m.reporters.erase(std::unique(m.reporters.begin(), m.reporters.end()), m.reporters.end());
  } else {
    for (const auto& [rep, n] : m.reporter_country_counts) {
      if (n >= opt.min_event_countries) {
        m.reporters.push_back(rep);
      } else {
        m.excluded_reporters.push_back(rep);
      }
    }
  }
  for (const auto& rep : m.reporters) {
    for (const auto& c : m.event_countries) {
      CoverageCell cell;
      cell.events = events_in.at(c);
      if (auto it = articles.find({rep, c}); it != articles.end()) cell.articles = it->second;
      m.cells.emplace(std::make_pair(rep, c), cell);
    }
  }
  return m;
}

nlohmann::ordered_json coverage_to_json(const CoverageMatrix& m) {
  nlohmann::ordered_json cells = nlohmann::ordered_json::array();
  for (const auto& [key, c] : m.cells) {
    cells.push_back({{"reporter", key.first},
                     {"event_country", key.second},
                     {"articles", c.articles},
                     {"events", c.events},
                     {"average", c.value()}});
  }
  nlohmann::ordered_json counts = nlohmann::ordered_json::object();
  for (const auto& [rep, n] : m.reporter_country_counts) counts[rep] = n;
  return nlohmann::ordered_json{{"reporters", m.reporters},
                                {"event_countries", m.event_countries},
                                {"unique_events", m.unique_events},
                                {"collided_events_skipped", m.collided_events_skipped},
                                {"unknown_reporter_articles", m.unknown_reporter_articles},
                                {"reporter_event_country_counts", counts},
                                {"excluded_reporters", m.excluded_reporters},
                                {"cells", cells}};
}

void write_coverage_csv(const CoverageMatrix& m, std::ostream& out) {
  out << "reporter,event_country,articles,events,average\n";
  for (const auto& [key, c] : m.cells) {
    std::ostringstream v;
    v << std::setprecision(17) << c.value();
    out << csv::join_row({key.first, key.second, std::to_string(c.articles), std::to_string(c.events), v.str()})
        << '\n';
  }
}

std::map<std::string, double> average_deaths_by_country(const EventStore& events) {
  std::vector<const EventRecord*> unique;
  double sum = 0;
  std::size_t known = 0;
  for (const auto& r : events.records()) {
    if (events.ids_for(r.fingerprint).size() > 1) continue;
    unique.push_back(&r);
    if (r.deaths) {
      sum += static_cast<double>(*r.deaths);
      ++known;
    }
  }
  const double fill = known ? sum / static_cast<double>(known) : std::numeric_limits<double>::quiet_NaN();
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (const auto* r : unique) {
    auto& a = acc[r->fingerprint.country];
    a.first += r->deaths ? static_cast<double>(*r->deaths) : fill;
    ++a.second;
  }
  std::map<std::string, double> out;
  for (const auto& [c, a] : acc) out[c] = a.first / static_cast<double>(a.second);
  return out;
}

// --- Attributes ------------------------------------------------------------

Continent parse_continent(std::string_view s) {
  std::string v = text::ascii_lower(text::trim(s));
  std::replace(v.begin(), v.end(), ' ', '_');
  if (v == "asia") return Continent::kAsia;
  if (v == "europe") return Continent::kEurope;
  if (v == "africa") return Continent::kAfrica;
  if (v == "oceania") return Continent::kOceania;
  if (v == "north_america") return Continent::kNorthAmerica;
  if (v == "south_america") return Continent::kSouthAmerica;
  if (v == "other" || v == "antarctica") return Continent::kOther;
  throw Error(ErrorCode::kParse, "unknown continent '" + std::string(s) + "'");
}

Government parse_government(std::string_view s) {
  const std::string v = text::ascii_lower(text::trim(s));
  if (v == "federal" || v == "federalism") return Government::kFederal;
  if (v == "republic") return Government::kRepublic;
  if (v == "other") return Government::kOther;
  throw Error(ErrorCode::kParse, "unknown government mode '" + std::string(s) + "'");
}

const std::vector<std::string>& religion_names() {
  static const std::vector<std::string> names = {"christian", "jewish", "muslim", "unaffiliated",
                                                 "hindu", "buddhist", "folk"};
  return names;
}

namespace {

std::optional<double> number_cell(const std::vector<std::string>& row, std::optional<std::size_t> col,
                                  const std::string& what, std::size_t line) {
  if (!col || *col >= row.size()) return std::nullopt;
  const std::string_view v = text::trim(row[*col]);
  if (v.empty() || v == "NA" || v == "nan") return std::nullopt;
  try {
    std::size_t used = 0;
    const double d = std::stod(std::string(v), &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kParse, "line " + std::to_string(line) + ": bad number for " + what + ": '" +
                                       std::string(v) + "'");
  }
}

std::string text_cell(const std::vector<std::string>& row, std::optional<std::size_t> col) {
  if (!col || *col >= row.size()) return {};
  return std::string(text::trim(row[*col]));
}

void check_range(const std::optional<double>& v, double lo, double hi, const std::string& what,
                 const std::string& code) {
  if (v && (*v < lo || *v > hi)) {
    throw Error(ErrorCode::kSchema, what + " for " + code + " outside [" + std::to_string(lo) + ", " +
                                        std::to_string(hi) + "]");
  }
}

CountryAttributeTable country_attrs_from(const csv::Table& t, const std::string& src) {
  const std::size_t c_code = t.require_column("alpha3", src);
  CountryAttributeTable out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::size_t line = t.lines[r];
    const std::string code = text_cell(row, c_code);
    if (code.empty()) throw Error(ErrorCode::kSchema, "line " + std::to_string(line) + ": empty alpha3");
    CountryAttributes a;
    auto num = [&](const char* name) { return number_cell(row, t.column(name), name, line); };
    a.gdp = num("gdp");
    a.population = num("population");
    a.population_density = num("population_density");
    a.area = num("area");
    a.gini = num("gini");
    a.democracy_index = num("democracy_index");
    a.press_freedom_index = num("press_freedom_index");
    a.literacy_rate = num("literacy_rate");
    a.internet_user_rate = num("internet_user_rate");
    if (auto v = text_cell(row, t.column("continent")); !v.empty()) a.continent = parse_continent(v);
    if (auto v = text_cell(row, t.column("government")); !v.empty()) a.government = parse_government(v);
    std::vector<double> shares;
    std::size_t present = 0;
    for (const auto& rel : religion_names()) {
      auto v = num(("religion_" + rel).c_str());
      if (v) ++present;
      shares.push_back(v.value_or(0));
    }
    if (present) {
      double sum = 0;
      for (double s : shares) {
        if (s < 0) throw Error(ErrorCode::kSchema, "negative religion share for " + code);
        sum += s;
      }
      if (std::abs(sum - 1) > 1e-6) {
        throw Error(ErrorCode::kSchema, "religion shares for " + code + " sum to " + std::to_string(sum),
                    {{"line", line}});
      }
      a.religion_shares = shares;
    }
    check_range(a.democracy_index, 0, 10, "democracy_index", code);
    check_range(a.press_freedom_index, 0, 100, "press_freedom_index", code);
    check_range(a.gini, 0, 100, "gini", code);
    check_range(a.literacy_rate, 0, 1, "literacy_rate", code);
    check_range(a.internet_user_rate, 0, 1, "internet_user_rate", code);
    for (const auto* v : {&a.gdp, &a.population, &a.population_density, &a.area}) {
      check_range(*v, 0, std::numeric_limits<double>::infinity(), "size attribute", code);
    }
    if (!out.emplace(code, std::move(a)).second) {
      throw Error(ErrorCode::kSchema, "duplicate country " + code + " at line " + std::to_string(line));
    }
  }
  return out;
}

PairAttributeTable pair_attrs_from(const csv::Table& t, const std::string& src) {
  const std::size_t c_rep = t.require_column("reporter", src);
  const std::size_t c_evt = t.require_column("event_country", src);
  PairAttributeTable out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::size_t line = t.lines[r];
    PairAttributes p;
    auto num = [&](const char* name) { return number_cell(row, t.column(name), name, line); };
    auto flag = [&](const char* name) -> std::optional<int> {
      auto v = num(name);
      if (!v) return std::nullopt;
      if (*v != 0 && *v != 1) {
        throw Error(ErrorCode::kSchema, "line " + std::to_string(line) + ": " + name + " must be 0 or 1");
      }
      return static_cast<int>(*v);
    };
    p.trade = num("trade");
    p.investment = num("investment");
    p.immigration = num("immigration");
    p.neighbor = flag("neighbor");
    p.same_language = flag("same_language");
    if (auto d = num("diplomatic_relation")) {
      if (*d < 1 || *d > 6 || *d != std::floor(*d)) {
        throw Error(ErrorCode::kSchema, "line " + std::to_string(line) + ": diplomatic_relation must be 1..6");
      }
      p.diplomatic_relation = static_cast<int>(*d);
    }
    const std::pair<std::string, std::string> key{text_cell(row, c_rep), text_cell(row, c_evt)};
    if (!out.emplace(key, p).second) {
      throw Error(ErrorCode::kSchema, "duplicate pair " + key.first + "/" + key.second + " at line " +
                                          std::to_string(line));
    }
  }
  return out;
}

}  // namespace

CountryAttributeTable load_country_attributes(const std::string& path) {
  return country_attrs_from(csv::read_file(path), path);
}
CountryAttributeTable parse_country_attributes(std::string_view content) {
  return country_attrs_from(csv::read_string(content), "<string>");
}
PairAttributeTable load_pair_attributes(const std::string& path) {
  return pair_attrs_from(csv::read_file(path), path);
}
PairAttributeTable parse_pair_attributes(std::string_view content) {
  return pair_attrs_from(csv::read_string(content), "<string>");
}

double shannon_entropy(const std::vector<double>& shares) {
  double h = 0;
  for (double p : shares) {
    if (p > 0) h -= p * std::log(p);
  }
  return h;
}

// --- Factors ---------------------------------------------------------------

const std::vector<std::string>& factor_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v = {"deaths"};
    auto crossed = [&](const std::string& base) {
      v.push_back(base);
      for (const char* s : {"_hh", "_hl", "_lh", "_ll"}) v.push_back(base + s);
    };
    crossed("gdp");
    v.insert(v.end(), {"trade", "investment"});
    crossed("democracy");
    crossed("press_freedom");
    v.insert(v.end(), {"federalism", "republic", "other_government", "both_federalism", "both_republic",
                       "federalism_and_other", "republic_and_other", "diplomatic_relation", "population",
                       "population_density", "immigration"});
    crossed("gini");
    v.insert(v.end(), {"area", "asia", "europe", "africa", "oceania", "north_america", "south_america",
                       "neighbors", "continent_sim", "same_language", "religion_diversity", "literacy_rate",
                       "internet_user_rate"});
    return v;
  }();
  return names;
}

namespace {

const std::set<std::string>& continuous_factors() {
  static const std::set<std::string> s = {"deaths",     "trade",      "investment",         "diplomatic_relation",
                                          "population", "population_density", "immigration", "area",
                                          "religion_diversity", "literacy_rate", "internet_user_rate"};
  return s;
}

// Fills missing country attributes: mean for numbers, most common value for
// categories (earliest enum value on ties), mean shares for religion.
CountryAttributeTable impute_attributes(const CountryAttributeTable& attrs) {
  CountryAttributeTable out = attrs;
  auto fill_num = [&](std::optional<double> CountryAttributes::*field) {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& [c, a] : attrs) {
      if (a.*field) {
        sum += *(a.*field);
        ++n;
      }
    }
    if (!n) return;
    for (auto& [c, a] : out) {
      if (!(a.*field)) a.*field = sum / static_cast<double>(n);
    }
  };
  for (auto f : {&CountryAttributes::gdp, &CountryAttributes::population, &CountryAttributes::population_density,
                 &CountryAttributes::area, &CountryAttributes::gini, &CountryAttributes::democracy_index,
                 &CountryAttributes::press_freedom_index, &CountryAttributes::literacy_rate,
                 &CountryAttributes::internet_user_rate}) {
    fill_num(f);
  }
  auto fill_mode = [&](auto field) {
    std::map<int, std::size_t> counts;
    for (const auto& [c, a] : attrs) {
      if (a.*field) ++counts[static_cast<int>(*(a.*field))];
    }
    if (counts.empty()) return;
    int best = counts.begin()->first;
    for (const auto& [v, n] : counts) {
      if (n > counts[best]) best = v;
    }
    for (auto& [c, a] : out) {
      if (!(a.*field)) a.*field = static_cast<std::remove_reference_t<decltype(*(a.*field))>>(best);
    }
  };
  fill_mode(&CountryAttributes::continent);
  fill_mode(&CountryAttributes::government);
  std::vector<double> mean(kReligionCount, 0);
  std::size_t n = 0;
  for (const auto& [c, a] : attrs) {
    if (!a.religion_shares) continue;
    for (std::size_t i = 0; i < kReligionCount; ++i) mean[i] += (*a.religion_shares)[i];
    ++n;
  }
  if (n) {
    for (auto& m : mean) m /= static_cast<double>(n);
    for (auto& [c, a] : out) {
      if (!a.religion_shares) a.religion_shares = mean;
    }
  }
  return out;
}

}  // namespace

std::optional<std::size_t> FactorMatrix::column(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  return std::nullopt;
}

Eigen::VectorXd FactorMatrix::y() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) v[static_cast<Eigen::Index>(i)] = rows[i].y;
  return v;
}

std::vector<Observation> coverage_observations(const CoverageMatrix& m, bool include_self) {
  std::vector<Observation> out;
  for (const auto& [key, cell] : m.cells) {
    if (!include_self && key.first == key.second) continue;
    out.push_back({key.first, key.second, cell.value()});
  }
  return out;
}

FactorMatrix build_factors(const std::vector<Observation>& pairs, const CountryAttributeTable& attrs_in,
                           const PairAttributeTable& pair_attrs,
                           const std::map<std::string, double>& deaths_by_country, const FactorOptions& opt) {
  const CountryAttributeTable attrs = opt.impute_country_attributes ? impute_attributes(attrs_in) : attrs_in;
  FactorMatrix f;
  f.names = factor_names();
  for (const auto& n : f.names) f.binary.push_back(!continuous_factors().count(n));
  f.rows = pairs;
  const Eigen::Index cols = static_cast<Eigen::Index>(f.names.size());
  f.values = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(pairs.size()), cols,
                                       std::numeric_limits<double>::quiet_NaN());

  auto country = [&](const std::string& code) -> const CountryAttributes& {
    auto it = attrs.find(code);
    if (it == attrs.end()) {
      throw Error(ErrorCode::kMissingKey, "no attributes for country " + code);
    }
    return it->second;
  };
  auto need = [](const auto& v, const std::string& what, const std::string& code) {
    if (!v) {
      throw Error(ErrorCode::kMissingKey, "missing " + what + " for " + code +
                                              " (enable attribute imputation to fill it)");
    }
    return *v;
  };

  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& [rep, evt, y] = pairs[i];
    const CountryAttributes& e = country(evt);
    const CountryAttributes& r = country(rep);
    Eigen::Index c = 0;
    auto put = [&](double v) { f.values(static_cast<Eigen::Index>(i), c++) = v; };
    auto crossed = [&](bool eh, bool rh) {
      put(eh);
      put(eh && rh);
      put(eh && !rh);
      put(!eh && rh);
      put(!eh && !rh);
    };
    const PairAttributes* p = nullptr;
    if (auto it = pair_attrs.find({rep, evt}); it != pair_attrs.end()) p = &it->second;
    const PairAttributes* rev = nullptr;
    if (auto it = pair_attrs.find({evt, rep}); it != pair_attrs.end()) rev = &it->second;
    if (!p) ++f.missing_pair_rows;
    // Symmetric relations fall back to the reversed pair.
    auto sym = [&](auto field, double dflt) -> double {
      if (p && p->*field) return static_cast<double>(*(p->*field));
      if (rev && rev->*field) return static_cast<double>(*(rev->*field));
      return dflt;
    };
    auto directed = [&](auto field, double dflt) -> double {
      if (p && p->*field) return static_cast<double>(*(p->*field));
      return dflt;
    };

    if (auto it = deaths_by_country.find(evt); it != deaths_by_country.end()) {
      put(it->second);
    } else {
      put(std::numeric_limits<double>::quiet_NaN());
    }
    crossed(need(e.gdp, "gdp", evt) > opt.gdp_threshold, need(r.gdp, "gdp", rep) > opt.gdp_threshold);
    put(sym(&PairAttributes::trade, 0));
    put(directed(&PairAttributes::investment, 0));
    crossed(need(e.democracy_index, "democracy_index", evt) > opt.democracy_threshold,
            need(r.democracy_index, "democracy_index", rep) > opt.democracy_threshold);
    crossed(need(e.press_freedom_index, "press_freedom_index", evt) > opt.press_freedom_threshold,
            need(r.press_freedom_index, "press_freedom_index", rep) > opt.press_freedom_threshold);
    const Government ge = need(e.government, "government", evt);
    const Government gr = need(r.government, "government", rep);
    put(ge == Government::kFederal);
    put(ge == Government::kRepublic);
    put(ge == Government::kOther);
    put(ge == Government::kFederal && gr == Government::kFederal);
    put(ge == Government::kRepublic && gr == Government::kRepublic);
    put(ge == Government::kFederal && gr == Government::kOther);
    put(ge == Government::kRepublic && gr == Government::kOther);
    put(directed(&PairAttributes::diplomatic_relation, 1));
    put(need(e.population, "population", evt));
    put(need(e.population_density, "population_density", evt));
    put(directed(&PairAttributes::immigration, 0));
    crossed(need(e.gini, "gini", evt) > opt.gini_threshold, need(r.gini, "gini", rep) > opt.gini_threshold);
    put(need(e.area, "area", evt));
    const Continent ce = need(e.continent, "continent", evt);
    const Continent cr = need(r.continent, "continent", rep);
    for (Continent k : {Continent::kAsia, Continent::kEurope, Continent::kAfrica, Continent::kOceania,
                        Continent::kNorthAmerica, Continent::kSouthAmerica}) {
      put(ce == k);
    }
    put(sym(&PairAttributes::neighbor, 0));
    put(ce == cr && ce != Continent::kOther);
    put(sym(&PairAttributes::same_language, 0));
    put(shannon_entropy(need(e.religion_shares, "religion shares", evt)));
    put(need(r.literacy_rate, "literacy_rate", rep));
    put(need(r.internet_user_rate, "internet_user_rate", rep));
  }
  if (f.missing_pair_rows) {
    f.warnings.push_back(std::to_string(f.missing_pair_rows) +
                         " pairs absent from the pair table; defaults used");
  }
  return f;
}

void write_factor_csv(const FactorMatrix& f, std::ostream& out) {
  std::vector<std::string> header = {"reporter", "event_country", "y"};
  header.insert(header.end(), f.names.begin(), f.names.end());
  out << csv::join_row(header) << '\n';
  for (std::size_t i = 0; i < f.rows.size(); ++i) {
    std::vector<std::string> row = {f.rows[i].reporter, f.rows[i].event_country};
    auto num = [](double v) {
      if (std::isnan(v)) return std::string();
      std::ostringstream ss;
      ss << std::setprecision(17) << v;
      return ss.str();
    };
    row.push_back(num(f.rows[i].y));
    for (Eigen::Index c = 0; c < f.values.cols(); ++c) row.push_back(num(f.values(static_cast<Eigen::Index>(i), c)));
    out << csv::join_row(row) << '\n';
  }
}

FactorMatrix preprocess(const FactorMatrix& in, const std::string& deaths_column) {
  FactorMatrix f = in;
  const Eigen::Index n = f.values.rows();
  for (Eigen::Index c = 0; c < f.values.cols(); ++c) {
    const std::string& name = f.names[static_cast<std::size_t>(c)];
    auto col = f.values.col(c);
    if (f.binary[static_cast<std::size_t>(c)]) {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (std::isnan(col[i])) throw Error(ErrorCode::kInvalidArgument, "missing value in binary column " + name);
      }
      continue;
    }
    double sum = 0;
    Eigen::Index known = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!std::isnan(col[i])) {
        sum += col[i];
        ++known;
      }
    }
    if (n && !known) throw Error(ErrorCode::kInvalidArgument, "column " + name + " has no values");
    if (known < n) {
      const double mean = sum / static_cast<double>(known);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (std::isnan(col[i])) col[i] = mean;
      }
      f.warnings.push_back(name + ": imputed " + std::to_string(n - known) + " missing values with the mean");
    }
    if (name == deaths_column) {
      for (Eigen::Index i = 0; i < n; ++i) col[i] = std::log1p(col[i]);
    }
    if (!n) continue;
    const double lo = col.minCoeff();
    const double hi = col.maxCoeff();
    if (hi == lo) {
      col.setZero();
      f.warnings.push_back(name + ": constant column scaled to 0");
      log::warn("preprocess.constant_column", {{"column", name}});
    } else {
      for (Eigen::Index i = 0; i < n; ++i) col[i] = (col[i] - lo) / (hi - lo);
    }
  }
  return f;
}

DvTransform parse_dv_transform(std::string_view s) {
  if (s == "raw") return DvTransform::kRaw;
  if (s == "log1p") return DvTransform::kLog1p;
  if (s == "minmax") return DvTransform::kMinMax;
  throw Error(ErrorCode::kInvalidArgument, "dv transform must be raw, log1p, or minmax");
}

Eigen::VectorXd transform_dv(const Eigen::VectorXd& y, DvTransform t) {
  Eigen::VectorXd out = y;
  if (t == DvTransform::kLog1p) {
    out = y.unaryExpr([](double v) { return std::log1p(v); });
  } else if (t == DvTransform::kMinMax && y.size()) {
    const double lo = y.minCoeff(), hi = y.maxCoeff();
    out = hi > lo ? Eigen::VectorXd((y.array() - lo) / (hi - lo)) : Eigen::VectorXd::Zero(y.size());
  }
  return out;
}

// --- Regression ------------------------------------------------------------

OlsResult ols_fit(const Eigen::MatrixXd& X0, const Eigen::VectorXd& y, const std::vector<std::string>& names,
                  bool intercept) {
  if (static_cast<std::size_t>(X0.cols()) != names.size()) {
    throw Error(ErrorCode::kInvalidArgument, "column names do not match the design matrix");
  }
  if (X0.rows() != y.size()) throw Error(ErrorCode::kInvalidArgument, "X and y row counts differ");
  const Eigen::Index n = X0.rows();
  const Eigen::Index k = X0.cols() + (intercept ? 1 : 0);
  OlsResult r;
  if (intercept) r.names.push_back("(intercept)");
  r.names.insert(r.names.end(), names.begin(), names.end());
  if (n <= k) {
    throw Error(ErrorCode::kInvalidArgument,
                "need more observations than parameters (n=" + std::to_string(n) + ", k=" + std::to_string(k) + ")");
  }
  Eigen::MatrixXd X(n, k);
  if (intercept) X.col(0).setOnes();
  X.rightCols(X0.cols()) = X0;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < k) {
    std::vector<std::string> dependent;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index i = qr.rank(); i < k; ++i) dependent.push_back(r.names[static_cast<std::size_t>(perm[i])]);
    std::sort(dependent.begin(), dependent.end());
    std::string list;
    for (const auto& d : dependent) list += (list.empty() ? "" : ", ") + d;
    throw Error(ErrorCode::kRankDeficient, "design matrix is rank deficient; dependent columns: " + list,
                {{"dependent_columns", dependent}});
  }
  r.beta = qr.solve(y);
  r.residuals = y - X * r.beta;
  r.n = static_cast<std::size_t>(n);
  r.k = static_cast<std::size_t>(k);
  r.rss = r.residuals.squaredNorm();
  const double ybar = intercept ? y.mean() : 0.0;
  r.tss = (y.array() - ybar).square().sum();
  const double nd = static_cast<double>(n), kd = static_cast<double>(k);
  r.r2 = r.tss > 0 ? 1 - r.rss / r.tss : std::numeric_limits<double>::quiet_NaN();
  const double dof_model = intercept ? nd - 1 : nd;
  r.adj_r2 = 1 - (1 - r.r2) * dof_model / (nd - kd);
  r.aic = nd * std::log(r.rss / nd) + 2 * kd;

  // (XᵀX)⁻¹ = P R⁻¹ R⁻ᵀ Pᵀ
  const Eigen::MatrixXd R = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd Rinv = R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  const Eigen::MatrixXd cov_perm = Rinv * Rinv.transpose();
  const auto P = qr.colsPermutation();
  const Eigen::MatrixXd cov = P * cov_perm * P.transpose();
  const double sigma2 = r.rss / (nd - kd);
  r.se = (cov.diagonal() * sigma2).cwiseSqrt();
  r.t = r.beta.cwiseQuotient(r.se);
  r.p.resize(k);
  boost::math::students_t dist(nd - kd);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double t = r.t[j];
    if (std::isnan(t)) {
      r.p[j] = std::numeric_limits<double>::quiet_NaN();
    } else if (std::isinf(t)) {
      r.p[j] = 0;
    } else {
      r.p[j] = 2 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
    }
  }
  return r;
}

std::string significance_stars(double p) {
  if (std::isnan(p)) return "";
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

namespace {

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& X, const std::vector<std::size_t>& cols) {
  Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = X.col(static_cast<Eigen::Index>(cols[i]));
  return out;
}

std::vector<std::string> select_names(const std::vector<std::string>& names, const std::vector<std::size_t>& cols) {
  std::vector<std::string> out;
  for (auto c : cols) out.push_back(names[c]);
  return out;
}

}  // namespace

RegressionResult forward_aic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             const std::vector<std::string>& names, const std::vector<std::string>& always_in,
                             int jobs) {
  if (static_cast<std::size_t>(X.cols()) != names.size()) {
    throw Error(ErrorCode::kInvalidArgument, "column names do not match the design matrix");
  }
  std::vector<std::size_t> in;
  for (const auto& a : always_in) {
    auto it = std::find(names.begin(), names.end(), a);
    if (it == names.end()) throw Error(ErrorCode::kNotFound, "always-in column '" + a + "' is not a candidate");
    in.push_back(static_cast<std::size_t>(it - names.begin()));
  }
  std::vector<std::size_t> pool;
  for (std::size_t c = 0; c < names.size(); ++c) {
    if (std::find(in.begin(), in.end(), c) == in.end()) pool.push_back(c);
  }

  RegressionResult res;
  res.model = ols_fit(select_columns(X, in), y, select_names(names, in));
  res.trace.push_back({in.empty() ? "(intercept)" : "(intercept+fixed)", res.model.aic});
  std::set<std::string> noted;
  for (;;) {
    if (pool.empty()) break;
    std::vector<double> aic(pool.size(), std::numeric_limits<double>::quiet_NaN());
    std::vector<std::string> skip(pool.size());
    parallel_chunks(pool.size(), jobs, [&](std::size_t, std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        std::vector<std::size_t> cols = in;
        cols.push_back(pool[i]);
        try {
          aic[i] = ols_fit(select_columns(X, cols), y, select_names(names, cols)).aic;
        } catch (const Error& err) {
          if (err.code() != ErrorCode::kRankDeficient && err.code() != ErrorCode::kInvalidArgument) throw;
          skip[i] = err.what();
        }
      }
    });
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (!skip[i].empty() && noted.insert(names[pool[i]]).second) {
        res.notes.push_back("skipped " + names[pool[i]] + ": " + skip[i]);
      }
      if (std::isnan(aic[i])) continue;
      if (!best || aic[i] < aic[*best]) best = i;
    }
    if (!best || !(aic[*best] < res.model.aic)) break;
    in.push_back(pool[*best]);
    res.selected.push_back(names[pool[*best]]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(*best));
    res.model = ols_fit(select_columns(X, in), y, select_names(names, in));
    res.trace.push_back({res.selected.back(), res.model.aic});
  }
  return res;
}

std::vector<double> vif(const Eigen::MatrixXd& X) {
  const Eigen::Index p = X.cols();
  if (p < 2) throw Error(ErrorCode::kInvalidArgument, "VIF needs at least two columns");
  std::vector<double> out;
  for (Eigen::Index j = 0; j < p; ++j) {
    Eigen::MatrixXd others(X.rows(), p - 1);
    for (Eigen::Index c = 0, o = 0; c < p; ++c) {
      if (c != j) others.col(o++) = X.col(c);
    }
    std::vector<std::string> nm(static_cast<std::size_t>(p - 1), "x");
    try {
      const OlsResult r = ols_fit(others, X.col(j), nm);
      if (!(r.tss > 0) || r.r2 >= 1 - 1e-12) {
        out.push_back(std::numeric_limits<double>::infinity());
      } else {
        out.push_back(1 / (1 - r.r2));
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kRankDeficient) throw;
      out.push_back(std::numeric_limits<double>::infinity());
    }
  }
  return out;
}

namespace {

nlohmann::ordered_json num_or_null(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

}  // namespace

nlohmann::ordered_json regression_to_json(const RegressionResult& r, const std::vector<double>& vifs) {
  nlohmann::ordered_json coefs = nlohmann::ordered_json::array();
  for (std::size_t j = 0; j < r.model.names.size(); ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    coefs.push_back({{"name", r.model.names[j]},
                     {"coef", num_or_null(r.model.beta[i])},
                     {"se", num_or_null(r.model.se[i])},
                     {"t", num_or_null(r.model.t[i])},
                     {"p", num_or_null(r.model.p[i])},
                     {"stars", significance_stars(r.model.p[i])}});
  }
  nlohmann::ordered_json trace = nlohmann::ordered_json::array();
  for (const auto& s : r.trace) trace.push_back({{"factor", s.factor}, {"aic", num_or_null(s.aic)}});
  nlohmann::ordered_json j = {{"n", r.model.n},
                              {"parameters", r.model.k},
                              {"selected", r.selected},
                              {"coefficients", coefs},
                              {"r2", num_or_null(r.model.r2)},
                              {"adj_r2", num_or_null(r.model.adj_r2)},
                              {"aic", num_or_null(r.model.aic)},
                              {"rss", r.model.rss},
                              {"aic_trace", trace},
                              {"notes", r.notes}};
  if (!vifs.empty()) {
    nlohmann::ordered_json v = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < vifs.size() && i < r.selected.size(); ++i) v[r.selected[i]] = num_or_null(vifs[i]);
    j["vif"] = v;
  }
  return j;
}

std::string regression_table(const RegressionResult& r, const std::string& title) {
  std::ostringstream out;
  if (!title.empty()) out << title << '\n';
  out << std::left << std::setw(24) << "Variable" << std::right << std::setw(12) << "Coef." << std::setw(4) << ""
      << std::setw(10) << "SE" << std::setw(10) << "p" << '\n';
  for (std::size_t j = 0; j < r.model.names.size(); ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    out << std::left << std::setw(24) << r.model.names[j] << std::right << std::fixed << std::setprecision(3)
        << std::setw(12) << r.model.beta[i] << std::left << std::setw(4) << significance_stars(r.model.p[i])
        << std::right << std::setw(10) << r.model.se[i] << std::setw(10) << std::setprecision(4) << r.model.p[i]
        << '\n';
  }
  out << std::setprecision(3) << "N = " << r.model.n << ", adj. R2 = " << r.model.adj_r2
      << ", AIC = " << r.model.aic << '\n';
  out << "*** p<0.001, ** p<0.01, * p<0.05\n";
  return out.str();
}

}  // namespace fame
