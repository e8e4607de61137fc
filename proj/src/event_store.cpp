#include "fame/event_store.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "fame/csv.hpp"
#include "fame/error.hpp"
#include "fame/text.hpp"

namespace fame {

EventClass::EventClass(std::string_view label) : name_(text::normalize_match(label)) {
  if (name_.empty()) throw Error(ErrorCode::kInvalidArgument, "empty event class label");
}

const std::vector<std::string>& builtin_event_classes() {
  static const std::vector<std::string> classes = {
      "earthquake", "flood", "avalanche", "storm", "landslide", "volcano", "wildfire", "attack"};
  return classes;
}

std::string EventFingerprint::key() const {
  return event_class.name() + "|" + country + "|" + date.iso();
}

std::string_view to_string(EventSource s) {
  switch (s) {
    case EventSource::kEmdat: return "EMDAT";
    case EventSource::kUsgs: return "USGS";
    case EventSource::kGtd: return "GTD";
    case EventSource::kOther: return "other";
  }
  return "other";
}

EventSource parse_event_source(std::string_view s) {
  std::string k = text::ascii_lower(text::trim(s));
  k.erase(std::remove(k.begin(), k.end(), '-'), k.end());
  if (k == "emdat") return EventSource::kEmdat;
  if (k == "usgs") return EventSource::kUsgs;
  if (k == "gtd") return EventSource::kGtd;
  return EventSource::kOther;
}

void EventStore::add(EventRecord record) {
  if (record.id.empty()) throw Error(ErrorCode::kInvalidArgument, "event record with empty id");
  if (by_id_.count(record.id)) {
    throw Error(ErrorCode::kInvalidArgument, "duplicate event id " + record.id);
  }
  if (record.deaths && record.casualties && *record.deaths > *record.casualties) {
    throw Error(ErrorCode::kInvalidArgument, "event " + record.id + " has deaths > casualties");
  }
  by_id_[record.id] = records_.size();
  by_fingerprint_[record.fingerprint].push_back(record.id);
  records_.push_back(std::move(record));
}

const EventRecord* EventStore::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &records_[it->second];
}

const std::vector<std::string>& EventStore::ids_for(const EventFingerprint& fp) const {
  static const std::vector<std::string> kEmpty;
  auto it = by_fingerprint_.find(fp);
  return it == by_fingerprint_.end() ? kEmpty : it->second;
}

EventFileFormat parse_event_format(std::string_view s) {
  const std::string k = text::ascii_lower(s);
  if (k == "csv") return EventFileFormat::kCsv;
  if (k == "jsonl") return EventFileFormat::kJsonl;
  throw Error(ErrorCode::kInvalidArgument, "unknown events format '" + std::string(s) + "'");
}

ColumnMapping ColumnMapping::parse(std::string_view spec) {
  ColumnMapping m;
  for (const auto& pair : csv::split(spec, ',')) {
    const auto eq = pair.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument, "mapping entry '" + pair + "' lacks '='");
    }
    const std::string key(text::trim(std::string_view(pair).substr(0, eq)));
    const std::string value(text::trim(std::string_view(pair).substr(eq + 1)));
    if (key == "class") m.event_class = value;
    else if (key == "country") m.country = value;
    else if (key == "start_date") m.start_date = value;
    else if (key == "deaths") m.deaths = value;
    else if (key == "casualties") m.casualties = value;
    else if (key == "source") m.source = value;
    else if (key == "id") m.id = value;
    else throw Error(ErrorCode::kInvalidArgument, "unknown mapping key '" + key + "'");
  }
  return m;
}

namespace {

// Nonnegative integer count; empty → missing. Accepts integral decimals
// such as "12.0" that some exports produce.
std::optional<std::int64_t> parse_count(std::string_view raw, const char* what) {
  const auto s = text::trim(raw);
  if (s.empty() || s == "NA" || s == "null" || s == "-") return std::nullopt;
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(std::string(s), &used);
  } catch (const std::exception&) {
    throw Error(ErrorCode::kParse, std::string(what) + " '" + std::string(s) + "' is not a number");
  }
  if (used != s.size() || !std::isfinite(v) || v < 0 || std::floor(v) != v) {
    throw Error(ErrorCode::kParse,
                std::string(what) + " '" + std::string(s) + "' is not a nonnegative integer");
  }
  return static_cast<std::int64_t>(v);
}

using Fields = std::map<std::string, std::string>;

const std::string* field(const Fields& f, const std::string& column) {
  auto it = f.find(column);
  return it == f.end() ? nullptr : &it->second;
}

EventRecord build_record(const Fields& fields, const Fields& raw, std::size_t row,
                         const EventLoadOptions& opt, const CountryTable& countries) {
  const auto& m = opt.mapping;
  EventRecord r;
  const auto* cls = field(fields, m.event_class);
  if (!cls || text::trim(*cls).empty()) {
    throw Error(ErrorCode::kParse, "missing class column '" + m.event_class + "'");
  }
  r.fingerprint.event_class = EventClass(*cls);

  const auto* country = field(fields, m.country);
  if (!country || text::trim(*country).empty()) {
    throw Error(ErrorCode::kParse, "missing country column '" + m.country + "'");
  }
  auto code = countries.resolve(*country);
  if (!code) throw Error(ErrorCode::kParse, "unrecognized country '" + *country + "'");
  r.fingerprint.country = *code;

  const auto* date = field(fields, m.start_date);
  if (!date) throw Error(ErrorCode::kParse, "missing date column '" + m.start_date + "'");
  auto d = Date::parse(*date);
  if (!d) throw Error(ErrorCode::kParse, "unparseable date '" + *date + "'");
  r.fingerprint.date = *d;

  if (const auto* v = field(fields, m.deaths)) r.deaths = parse_count(*v, "deaths");
  if (const auto* v = field(fields, m.casualties)) r.casualties = parse_count(*v, "casualties");
  if (r.deaths && r.casualties && *r.deaths > *r.casualties) {
    throw Error(ErrorCode::kParse, "deaths exceed casualties");
  }
  const auto* src = field(fields, m.source);
  r.source = src && !text::trim(*src).empty() ? parse_event_source(*src) : opt.default_source;

  const auto* id = field(fields, m.id);
  if (id && !text::trim(*id).empty()) {
    r.id = std::string(text::trim(*id));
  } else {
    r.id = std::string(to_string(r.source)) + ":" + std::to_string(row);
  }
  r.raw = raw;
  return r;
}

std::string json_scalar_to_string(const nlohmann::json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

EventLoadResult load_from_stream(std::istream& in, EventFileFormat format,
                                 const EventLoadOptions& opt) {
  const CountryTable& countries = opt.countries ? *opt.countries : CountryTable::builtin();
  EventLoadResult result;

  auto accept = [&](const Fields& fields, const Fields& raw, std::size_t row) {
    try {
      EventRecord r = build_record(fields, raw, row, opt, countries);
      result.store.add(std::move(r));
    } catch (const Error& e) {
      result.rejected.push_back({row, e.what()});
    }
  };

  if (format == EventFileFormat::kCsv) {
    csv::Reader reader(in);
    std::vector<std::string> header, row;
    if (reader.next(header)) {
      for (auto& h : header) h = std::string(text::trim(h));
      std::size_t n = 0;
      while (reader.next(row)) {
        ++n;
        Fields f;
        for (std::size_t i = 0; i < header.size(); ++i) {
          f[header[i]] = i < row.size() ? row[i] : std::string();
        }
        accept(f, f, n);
      }
    }
  } else {
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      if (text::trim(line).empty()) continue;
      ++n;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        result.rejected.push_back({n, std::string("invalid JSON: ") + e.what()});
        continue;
      }
      if (!j.is_object()) {
        result.rejected.push_back({n, "line is not a JSON object"});
        continue;
      }
      Fields f, raw;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.key() == "raw" && it.value().is_object()) continue;
        f[it.key()] = json_scalar_to_string(it.value());
      }
      if (j.contains("raw") && j["raw"].is_object()) {
        for (auto it = j["raw"].begin(); it != j["raw"].end(); ++it) {
          raw[it.key()] = json_scalar_to_string(it.value());
        }
      } else {
        raw = f;
      }
      accept(f, raw, n);
    }
  }

  if (opt.strict && !result.rejected.empty()) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : result.rejected) rows.push_back({{"row", r.row}, {"reason", r.reason}});
    throw Error(ErrorCode::kRejectedRows,
                std::to_string(result.rejected.size()) + " event row(s) rejected, first at row " +
                    std::to_string(result.rejected.front().row) + ": " +
                    result.rejected.front().reason,
                {{"rows", rows}});
  }
  return result;
}

}  // namespace

EventLoadResult load_events(const std::string& path, EventFileFormat format,
                            const EventLoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open events file " + path, {{"path", path}});
  return load_from_stream(in, format, options);
}

EventLoadResult load_events_from_string(std::string_view content, EventFileFormat format,
                                        const EventLoadOptions& options) {
  std::istringstream in{std::string(content)};
  return load_from_stream(in, format, options);
}

nlohmann::json event_to_json(const EventRecord& r) {
  nlohmann::json j;
  j["id"] = r.id;
  j["class"] = r.fingerprint.event_class.name();
  j["country"] = r.fingerprint.country;
  j["start_date"] = r.fingerprint.date.iso();
  j["deaths"] = r.deaths ? nlohmann::json(*r.deaths) : nlohmann::json(nullptr);
  j["casualties"] = r.casualties ? nlohmann::json(*r.casualties) : nlohmann::json(nullptr);
  j["source"] = std::string(to_string(r.source));
  j["raw"] = r.raw;
  return j;
}

void save_events_jsonl(const EventStore& store, std::ostream& out) {
  for (const auto& r : store.records()) out << event_to_json(r).dump() << '\n';
}

EventStore filter_gtd_salience(const EventStore& store) {
  const auto& recs = store.records();
  std::vector<bool> keep(recs.size(), false);
  std::map<std::string, std::vector<std::size_t>> by_country;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (recs[i].source != EventSource::kGtd) {
      keep[i] = true;
      continue;
    }
    if (recs[i].casualties.value_or(0) > 10) keep[i] = true;
    by_country[recs[i].fingerprint.country].push_back(i);
  }
  for (auto& [country, idx] : by_country) {
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      const auto ca = recs[a].casualties.value_or(0);
      const auto cb = recs[b].casualties.value_or(0);
      if (ca != cb) return ca > cb;
      if (recs[a].fingerprint.date != recs[b].fingerprint.date) {
        return recs[a].fingerprint.date < recs[b].fingerprint.date;
      }
      return recs[a].id < recs[b].id;
    });
    for (std::size_t k = 0; k < idx.size() && k < 3; ++k) keep[idx[k]] = true;
  }
  EventStore out;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (keep[i]) out.add(recs[i]);
  }
  return out;
}

CollisionReport check_fingerprint_collisions(const EventStore& store) {
  CollisionReport report;
  for (const auto& r : store.records()) {
    const auto& ids = store.ids_for(r.fingerprint);
    if (ids.size() > 1) report.emplace(r.fingerprint.key(), ids);
  }
  return report;
}

nlohmann::json collision_report_json(const CollisionReport& report) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, ids] : report) j[k] = ids;
  return j;
}

}  // namespace fame
