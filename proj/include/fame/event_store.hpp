#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "fame/country_table.hpp"
#include "fame/date.hpp"

namespace fame {

// Event class labels. The eight built-in classes are listed by
// builtin_event_classes(); other nonempty lowercase labels are accepted.
class EventClass {
 public:
  EventClass() = default;
  // Lowercases and trims; throws fame::Error on an empty label.
  explicit EventClass(std::string_view label);

  const std::string& name() const { return name_; }
  friend auto operator<=>(const EventClass&, const EventClass&) = default;

 private:
  std::string name_;
};

const std::vector<std::string>& builtin_event_classes();

struct EventFingerprint {
  EventClass event_class;
  std::string country;  // ISO-3166 alpha-3
  Date date;            // event start

  // "{class}|{alpha3}|{YYYY-MM-DD}"
  std::string key() const;
  friend auto operator<=>(const EventFingerprint&, const EventFingerprint&) = default;
};

enum class EventSource { kEmdat, kUsgs, kGtd, kOther };

std::string_view to_string(EventSource s);
// Case-insensitive; unknown names map to kOther.
EventSource parse_event_source(std::string_view s);

struct EventRecord {
  std::string id;
  EventFingerprint fingerprint;
  std::optional<std::int64_t> deaths;
  std::optional<std::int64_t> casualties;
  EventSource source = EventSource::kOther;
  std::map<std::string, std::string> raw;

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

// Insertion-ordered, immutable-after-load collection of event records with a
// fingerprint index.
class EventStore {
 public:
  // Throws on a duplicate id or deaths > casualties.
  void add(EventRecord record);

  const std::vector<EventRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const EventRecord* find(std::string_view id) const;
  // Record ids sharing `fp`, in insertion order.
  const std::vector<std::string>& ids_for(const EventFingerprint& fp) const;

  friend bool operator==(const EventStore& a, const EventStore& b) {
    return a.records_ == b.records_;
  }

 private:
  std::vector<EventRecord> records_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::map<EventFingerprint, std::vector<std::string>> by_fingerprint_;
};

enum class EventFileFormat { kCsv, kJsonl };
EventFileFormat parse_event_format(std::string_view s);

// Logical column → source column name.
struct ColumnMapping {
  std::string event_class = "class";
  std::string country = "country";
  std::string start_date = "start_date";
  std::string deaths = "deaths";
  std::string casualties = "casualties";
  std::string source = "source";
  std::string id = "id";

  // "class=Disaster Type,country=Country,start_date=Start"
  static ColumnMapping parse(std::string_view spec);
};

struct EventLoadOptions {
  ColumnMapping mapping;
  bool strict = false;
  EventSource default_source = EventSource::kOther;
  const CountryTable* countries = nullptr;  // nullptr → builtin table
};

struct RejectedRow {
  std::size_t row;  // 1-based data row (CSV header excluded)
  std::string reason;
};

struct EventLoadResult {
  EventStore store;
  std::vector<RejectedRow> rejected;
};

// Throws kNotFound for a missing file and kRejectedRows (details list the
// rows) when strict mode is on and any row fails validation.
EventLoadResult load_events(const std::string& path, EventFileFormat format,
                            const EventLoadOptions& options = {});
EventLoadResult load_events_from_string(std::string_view content, EventFileFormat format,
                                        const EventLoadOptions& options = {});

nlohmann::json event_to_json(const EventRecord& r);
// One JSON object per record; load_events(kJsonl) reads it back identically.
void save_events_jsonl(const EventStore& store, std::ostream& out);

// Keeps GTD records with more than 10 casualties plus the top three per
// country by casualties (missing counts as 0; ties by earlier date, then id).
// Non-GTD records pass through. Order is preserved.
EventStore filter_gtd_salience(const EventStore& store);

// fingerprint key → ids for every fingerprint shared by two or more records.
using CollisionReport = std::map<std::string, std::vector<std::string>>;
CollisionReport check_fingerprint_collisions(const EventStore& store);
nlohmann::json collision_report_json(const CollisionReport& report);

}  // namespace fame
