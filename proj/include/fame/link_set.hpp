#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace fame {

class Corpus;

enum class Phase { kPhase1, kPhase2 };
std::string_view to_string(Phase p);
Phase parse_phase(std::string_view s);

struct EventLinks {
  std::vector<std::string> phase1;                 // (publish_date, id) order
  std::optional<std::vector<std::string>> phase2;  // unset until phase two runs
  std::map<std::string, std::vector<std::string>> evidence;  // article → matched keywords
  // All record ids sharing this event's fingerprint, when more than one.
  std::vector<std::string> collision_group;

  const std::vector<std::string>& ids(Phase p) const;

  friend bool operator==(const EventLinks&, const EventLinks&) = default;
};

// Event id → linked article ids per phase, in event insertion order.
class LinkSet {
 public:
  EventLinks& upsert(const std::string& event_id);
  const EventLinks* find(std::string_view event_id) const;
  EventLinks* find_mutable(std::string_view event_id);
  const std::vector<std::string>& event_ids() const { return order_; }
  std::size_t size() const { return order_.size(); }
  bool empty() const { return order_.empty(); }

  // One line per (event, phase) with keys event_id, phase, article_ids,
  // evidence, and collision_group when flagged. A non-empty header is
  // written first as {"fame_header": ...}.
  void write_jsonl(std::ostream& out, const nlohmann::json& header = {}) const;
  static LinkSet read_jsonl(std::istream& in);
  static LinkSet load(const std::string& path);

  friend bool operator==(const LinkSet& a, const LinkSet& b);

 private:
  std::vector<std::string> order_;
  std::unordered_map<std::string, EventLinks> links_;
};

// Describes every violation of: phase2 ⊆ phase1, article ids exist in the
// corpus, ids unique per phase. Empty means consistent.
std::vector<std::string> check_link_invariants(const LinkSet& links, const Corpus& corpus);

}  // namespace fame
