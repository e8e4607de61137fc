#include "fame/link_set.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "fame/corpus.hpp"
#include "fame/error.hpp"
#include "fame/text.hpp"

namespace fame {

std::string_view to_string(Phase p) { return p == Phase::kPhase1 ? "phase1" : "phase2"; }

Phase parse_phase(std::string_view s) {
  if (s == "phase1" || s == "1") return Phase::kPhase1;
  if (s == "phase2" || s == "2") return Phase::kPhase2;
  throw Error(ErrorCode::kInvalidArgument, "unknown phase '" + std::string(s) + "'");
}

const std::vector<std::string>& EventLinks::ids(Phase p) const {
  static const std::vector<std::string> kEmpty;
  if (p == Phase::kPhase1) return phase1;
  return phase2 ? *phase2 : kEmpty;
}

EventLinks& LinkSet::upsert(const std::string& event_id) {
  auto [it, inserted] = links_.try_emplace(event_id);
  if (inserted) order_.push_back(event_id);
  return it->second;
}

const EventLinks* LinkSet::find(std::string_view event_id) const {
  auto it = links_.find(std::string(event_id));
  return it == links_.end() ? nullptr : &it->second;
}

EventLinks* LinkSet::find_mutable(std::string_view event_id) {
  auto it = links_.find(std::string(event_id));
  return it == links_.end() ? nullptr : &it->second;
}

bool operator==(const LinkSet& a, const LinkSet& b) {
  return a.order_ == b.order_ && a.links_ == b.links_;
}

namespace {

nlohmann::json line_json(const std::string& id, const EventLinks& l, Phase phase) {
  const auto& ids = l.ids(phase);
  nlohmann::json j;
  j["event_id"] = id;
  j["phase"] = std::string(to_string(phase));
  j["article_ids"] = ids;
  nlohmann::json ev = nlohmann::json::object();
  for (const auto& a : ids) {
    auto it = l.evidence.find(a);
    if (it != l.evidence.end()) ev[a] = it->second;
  }
  j["evidence"] = ev;
  if (!l.collision_group.empty()) j["collision_group"] = l.collision_group;
  return j;
}

}  // namespace

void LinkSet::write_jsonl(std::ostream& out, const nlohmann::json& header) const {
  if (!header.is_null() && !header.empty()) out << nlohmann::json{{"fame_header", header}}.dump() << '\n';
  for (const auto& id : order_) {
    const auto& l = links_.at(id);
    out << line_json(id, l, Phase::kPhase1).dump() << '\n';
    if (l.phase2) out << line_json(id, l, Phase::kPhase2).dump() << '\n';
  }
}

LinkSet LinkSet::read_jsonl(std::istream& in) {
  LinkSet set;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::kParse, "links line " + std::to_string(n) + ": " + e.what());
    }
    if (j.contains("fame_header")) continue;
    try {
      const auto id = j.at("event_id").get<std::string>();
      const Phase phase = parse_phase(j.at("phase").get<std::string>());
      auto ids = j.at("article_ids").get<std::vector<std::string>>();
      EventLinks& l = set.upsert(id);
      if (phase == Phase::kPhase1) {
        l.phase1 = std::move(ids);
      } else {
        l.phase2 = std::move(ids);
      }
      if (j.contains("evidence")) {
        for (auto it = j["evidence"].begin(); it != j["evidence"].end(); ++it) {
          l.evidence[it.key()] = it.value().get<std::vector<std::string>>();
        }
      }
      if (j.contains("collision_group")) {
        l.collision_group = j["collision_group"].get<std::vector<std::string>>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kSchema, "links line " + std::to_string(n) + ": " + e.what());
    }
  }
  return set;
}

LinkSet LinkSet::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open links file " + path, {{"path", path}});
  return read_jsonl(in);
}

std::vector<std::string> check_link_invariants(const LinkSet& links, const Corpus& corpus) {
  std::vector<std::string> problems;
  for (const auto& id : links.event_ids()) {
    const auto& l = *links.find(id);
    std::set<std::string> p1(l.phase1.begin(), l.phase1.end());
    if (p1.size() != l.phase1.size()) problems.push_back(id + ": duplicate phase-1 ids");
    for (const auto& a : l.phase1) {
      if (!corpus.find(a)) problems.push_back(id + ": unknown article " + a);
    }
    if (l.phase2) {
      std::set<std::string> p2(l.phase2->begin(), l.phase2->end());
      if (p2.size() != l.phase2->size()) problems.push_back(id + ": duplicate phase-2 ids");
      for (const auto& a : *l.phase2) {
        if (!p1.count(a)) problems.push_back(id + ": phase-2 article " + a + " not in phase 1");
      }
    }
  }
  return problems;
}

}  // namespace fame
