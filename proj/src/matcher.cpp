#include "fame/matcher.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <limits>

#include "fame/error.hpp"
#include "fame/parallel.hpp"

namespace fame {

std::string_view to_string(MatchScope s) {
  switch (s) {
    case MatchScope::kTitleOnly: return "title_only";
    case MatchScope::kTitlePlusHead: return "title_plus_head";
    case MatchScope::kTitlePlusBody: return "title_plus_body";
  }
  return "title_plus_body";
}

MatchScope parse_match_scope(std::string_view s) {
  if (s == "title_only") return MatchScope::kTitleOnly;
  if (s == "title_plus_head") return MatchScope::kTitlePlusHead;
  if (s == "title_plus_body") return MatchScope::kTitlePlusBody;
  throw Error(ErrorCode::kInvalidArgument, "unknown match scope '" + std::string(s) + "'");
}

PatternAutomaton PatternAutomaton::compile(const KeywordLexicon& lexicon) {
  std::vector<Entry> entries;
  std::vector<KeywordTag> tags;
  entries.reserve(lexicon.keyword_count());
  for (const auto& [key, set] : lexicon.class_sets) {
    tags.push_back({TagKind::kClass, key});
    for (const auto& [kw, prov] : set.keywords) entries.push_back({kw, tags.back()});
  }
  for (const auto& [key, set] : lexicon.location_sets) {
    tags.push_back({TagKind::kLocation, key});
    for (const auto& [kw, prov] : set.keywords) entries.push_back({kw, tags.back()});
  }
  return compile(lexicon.language, std::move(entries), std::move(tags));
}

PatternAutomaton PatternAutomaton::compile(std::string language, std::vector<Entry> entries,
                                           std::vector<KeywordTag> extra_tags) {
  const auto t0 = std::chrono::steady_clock::now();
  entries.erase(std::remove_if(entries.begin(), entries.end(),
                               [](const Entry& e) { return e.keyword.empty(); }),
                entries.end());
  if (entries.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot compile an empty lexicon");
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.keyword != b.keyword) return a.keyword < b.keyword;
    return a.tag < b.tag;
  });
  entries.erase(std::unique(entries.begin(), entries.end(),
                            [](const Entry& a, const Entry& b) {
                              return a.keyword == b.keyword && a.tag == b.tag;
                            }),
                entries.end());

  PatternAutomaton a;
  a.language_ = std::move(language);

  // Tags and the pattern → tags CSR table.
  std::vector<KeywordTag> all_tags = std::move(extra_tags);
  for (const auto& e : entries) all_tags.push_back(e.tag);
  std::sort(all_tags.begin(), all_tags.end());
  all_tags.erase(std::unique(all_tags.begin(), all_tags.end()), all_tags.end());
  a.tags_ = all_tags;
  for (std::uint32_t i = 0; i < a.tags_.size(); ++i) a.tag_index_.emplace(a.tags_[i], i);
  a.tag_offsets_.push_back(0);
  for (std::size_t i = 0; i < entries.size();) {
    std::size_t j = i;
    a.patterns_.push_back(entries[i].keyword);
    while (j < entries.size() && entries[j].keyword == entries[i].keyword) {
      a.tag_list_.push_back(a.tag_index_.at(entries[j].tag));
      ++j;
    }
    a.tag_offsets_.push_back(static_cast<std::uint32_t>(a.tag_list_.size()));
    i = j;
  }

  // Byte classes: 0 for bytes absent from every pattern.
  bool used[256] = {};
  for (const auto& p : a.patterns_) {
    for (unsigned char c : p) used[c] = true;
  }
  a.num_classes_ = 1;
  for (int b = 0; b < 256; ++b) {
    a.byte_class_[b] = used[b] ? static_cast<std::uint8_t>(a.num_classes_++) : 0;
  }
  const std::uint32_t k = a.num_classes_;
  constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

  // Trie.
  std::vector<std::uint32_t> go(k, kNone);
  a.terminal_.assign(1, -1);
  for (std::uint32_t pid = 0; pid < a.patterns_.size(); ++pid) {
    std::uint32_t s = 0;
    for (unsigned char c : a.patterns_[pid]) {
      const std::size_t slot = static_cast<std::size_t>(s) * k + a.byte_class_[c];
      if (go[slot] == kNone) {
        go[slot] = static_cast<std::uint32_t>(a.terminal_.size());
        a.terminal_.push_back(-1);
        go.resize(go.size() + k, kNone);
      }
      s = go[slot];
    }
    a.terminal_[s] = static_cast<std::int32_t>(pid);
  }

  // BFS to fill failure transitions into a complete DFA.
  const std::size_t states = a.terminal_.size();
  std::vector<std::uint32_t> fail(states, 0);
  a.dict_link_.assign(states, 0);
  a.has_output_.assign(states, 0);
  std::deque<std::uint32_t> queue;
  for (std::uint32_t c = 0; c < k; ++c) {
    std::uint32_t& t = go[c];
    if (t == kNone) {
      t = 0;
    } else {
      fail[t] = 0;
      queue.push_back(t);
    }
  }
  while (!queue.empty()) {
    const std::uint32_t s = queue.front();
    queue.pop_front();
    const std::uint32_t f = fail[s];
    a.dict_link_[s] = a.terminal_[f] >= 0 ? f : a.dict_link_[f];
    a.has_output_[s] = a.terminal_[s] >= 0 || a.dict_link_[s] != 0;
    for (std::uint32_t c = 0; c < k; ++c) {
      std::uint32_t& t = go[static_cast<std::size_t>(s) * k + c];
      const std::uint32_t via_fail = go[static_cast<std::size_t>(f) * k + c];
      if (t == kNone) {
        t = via_fail;
      } else {
        fail[t] = via_fail;
        queue.push_back(t);
      }
    }
  }
  a.delta_ = std::move(go);
  a.compile_millis_ =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return a;
}

std::optional<std::uint32_t> PatternAutomaton::tag_id(TagKind kind, std::string_view key) const {
  auto it = tag_index_.find(KeywordTag{kind, std::string(key)});
  if (it == tag_index_.end()) return std::nullopt;
  return it->second;
}

std::vector<PatternAutomaton::Match> PatternAutomaton::find_all(std::string_view text) const {
  std::vector<Match> out;
  scan(text, [&](std::uint32_t p, std::uint32_t b, std::uint32_t e) { out.push_back({p, b, e}); });
  return out;
}

// --- Phase one -------------------------------------------------------------

namespace {

struct Target {
  std::uint32_t class_tag;
  std::uint32_t location_tag;
};

Target resolve_target(const EventFingerprint& fp, const PatternAutomaton& a) {
  auto c = a.tag_id(TagKind::kClass, fp.event_class.name());
  auto l = a.tag_id(TagKind::kLocation, fp.country);
  if (!c || !l) {
    throw Error(ErrorCode::kMissingKey,
                "lexicon '" + a.language() + "' lacks " +
                    (!c ? "class '" + fp.event_class.name() + "'" : "location '" + fp.country + "'"),
                {{"fingerprint", fp.key()}, {"language", a.language()}});
  }
  return {*c, *l};
}

struct Hit {
  std::uint32_t pattern;
};

// Scans the scoped fields of one article; fills `hits` (in text order) and
// `tags` (sorted, unique).
void scan_article(const PatternAutomaton& a, const MatchText& m, MatchScope scope,
                  std::vector<Hit>& hits, std::vector<std::uint32_t>& tags, std::size_t& bytes) {
  hits.clear();
  tags.clear();
  auto on_hit = [&](std::uint32_t p, std::uint32_t, std::uint32_t) {
    hits.push_back({p});
    for (auto t : a.pattern_tags(p)) tags.push_back(t);
  };
  a.scan(m.title, on_hit);
  bytes += m.title.size();
  if (scope == MatchScope::kTitlePlusHead) {
    a.scan(m.head, on_hit);
    bytes += m.head.size();
  } else if (scope == MatchScope::kTitlePlusBody) {
    a.scan(m.body, on_hit);
    bytes += m.body.size();
  }
  std::sort(tags.begin(), tags.end());
  tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
}

bool has_tag(const std::vector<std::uint32_t>& tags, std::uint32_t t) {
  return std::binary_search(tags.begin(), tags.end(), t);
}

std::vector<std::string> evidence_for(const PatternAutomaton& a, const std::vector<Hit>& hits,
                                      const Target& target, std::size_t cap) {
  std::vector<std::string> out;
  std::vector<std::uint32_t> seen;
  for (const auto& h : hits) {
    if (out.size() >= cap) break;
    bool relevant = false;
    for (auto t : a.pattern_tags(h.pattern)) {
      relevant |= t == target.class_tag || t == target.location_tag;
    }
    if (!relevant || std::find(seen.begin(), seen.end(), h.pattern) != seen.end()) continue;
    seen.push_back(h.pattern);
    out.push_back(a.pattern(h.pattern));
  }
  return out;
}

}  // namespace

PhaseOneResult phase_one(const EventFingerprint& event, const Corpus& corpus,
                         const PatternAutomaton& automaton, const PhaseOneOptions& opt) {
  const Target target = resolve_target(event, automaton);
  PhaseOneResult result;
  const auto [b, e] = corpus.window_range(event.date, opt.window_days, opt.window_before_days);
  std::vector<Hit> hits;
  std::vector<std::uint32_t> tags;
  std::size_t bytes = 0;
  for (std::size_t i = b; i < e; ++i) {
    const Article& art = corpus.at(i);
    if (art.language != automaton.language()) continue;
    scan_article(automaton, corpus.match_text(i), opt.scope, hits, tags, bytes);
    if (has_tag(tags, target.class_tag) && has_tag(tags, target.location_tag)) {
      result.article_ids.push_back(art.id);
      if (opt.keep_evidence) {
        result.evidence[art.id] = evidence_for(automaton, hits, target, opt.evidence_cap);
      }
    }
  }
  return result;
}

LinkSet phase_one_batch(const EventStore& events, const Corpus& corpus,
                        const PatternAutomaton& automaton, const PhaseOneOptions& opt,
                        PhaseOneStats* stats) {
  const PatternAutomaton* one[] = {&automaton};
  return phase_one_batch(events, corpus, std::span<const PatternAutomaton* const>(one), opt, stats);
}

LinkSet phase_one_batch(const EventStore& events, const Corpus& corpus,
                        std::span<const PatternAutomaton* const> automata,
                        const PhaseOneOptions& opt, PhaseOneStats* stats) {
  const auto t0 = std::chrono::steady_clock::now();
  if (opt.window_days < 0 || opt.window_before_days < 0) {
    throw Error(ErrorCode::kInvalidArgument, "window spans must be nonnegative");
  }

  // Unique fingerprints in first-seen order, sorted by date for the window
  // lookup, with per-language targets.
  struct Unit {
    EventFingerprint fp;
    std::vector<Target> targets;  // per automaton
  };
  std::vector<Unit> units;
  std::map<EventFingerprint, std::size_t> unit_of;
  for (const auto& r : events.records()) {
    if (unit_of.count(r.fingerprint)) continue;
    Unit u{r.fingerprint, {}};
    for (const auto* a : automata) u.targets.push_back(resolve_target(r.fingerprint, *a));
    unit_of.emplace(r.fingerprint, units.size());
    units.push_back(std::move(u));
  }
  std::vector<std::size_t> by_date(units.size());
  for (std::size_t i = 0; i < units.size(); ++i) by_date[i] = i;
  std::stable_sort(by_date.begin(), by_date.end(), [&](std::size_t x, std::size_t y) {
    return units[x].fp.date < units[y].fp.date;
  });
  std::vector<Date> unit_dates;
  for (auto i : by_date) unit_dates.push_back(units[i].fp.date);

  std::map<std::string, std::size_t, std::less<>> automaton_for_language;
  for (std::size_t i = 0; i < automata.size(); ++i) {
    automaton_for_language.emplace(automata[i]->language(), i);
  }

  // Articles that fall in at least one window.
  std::size_t lo = corpus.size(), hi = 0;
  if (!units.empty()) {
    const auto [b0, e0] = corpus.window_range(unit_dates.front(), opt.window_days, opt.window_before_days);
    const auto [b1, e1] = corpus.window_range(unit_dates.back(), opt.window_days, opt.window_before_days);
    lo = b0;
    hi = std::max(e0, e1);
  }
  if (lo > hi) lo = hi;

  struct Partial {
    std::vector<std::vector<std::size_t>> matched;  // per unit: article indices
    std::vector<std::vector<std::vector<std::string>>> evidence;
    std::size_t scanned = 0;
    std::size_t bytes = 0;
  };
  const std::size_t span_n = hi - lo;
  std::vector<Partial> partials(chunk_count(span_n, opt.jobs));
  parallel_chunks(span_n, opt.jobs, [&](std::size_t w, std::size_t b, std::size_t e) {
    Partial& part = partials[w];
    part.matched.resize(units.size());
    part.evidence.resize(units.size());
    std::vector<Hit> hits;
    std::vector<std::uint32_t> tags;
    for (std::size_t i = lo + b; i < lo + e; ++i) {
      const Article& art = corpus.at(i);
      auto ait = automaton_for_language.find(art.language);
      if (ait == automaton_for_language.end()) continue;
      // Units with t in [d - after, d + before].
      const Date d = art.publish_date;
      auto first = std::lower_bound(unit_dates.begin(), unit_dates.end(), d - opt.window_days);
      auto last = std::upper_bound(first, unit_dates.end(), d + opt.window_before_days);
      if (first == last) continue;
      const PatternAutomaton& a = *automata[ait->second];
      scan_article(a, corpus.match_text(i), opt.scope, hits, tags, part.bytes);
      ++part.scanned;
      if (tags.empty()) continue;
      for (auto it = first; it != last; ++it) {
        const std::size_t u = by_date[static_cast<std::size_t>(it - unit_dates.begin())];
        const Target& target = units[u].targets[ait->second];
        if (has_tag(tags, target.class_tag) && has_tag(tags, target.location_tag)) {
          part.matched[u].push_back(i);
          if (opt.keep_evidence) {
            part.evidence[u].push_back(evidence_for(a, hits, target, opt.evidence_cap));
          }
        }
      }
    }
  });

  LinkSet links;
  std::size_t pairs = 0;
  for (const auto& r : events.records()) {
    const std::size_t u = unit_of.at(r.fingerprint);
    EventLinks& l = links.upsert(r.id);
    for (const auto& part : partials) {
      if (part.matched.empty()) continue;
      for (std::size_t k = 0; k < part.matched[u].size(); ++k) {
        const std::string& aid = corpus.at(part.matched[u][k]).id;
        l.phase1.push_back(aid);
        if (opt.keep_evidence) l.evidence[aid] = part.evidence[u][k];
      }
    }
    const auto& group = events.ids_for(r.fingerprint);
    if (group.size() > 1) l.collision_group = group;
    pairs += l.phase1.size();
  }

  if (stats) {
    stats->fingerprints = units.size();
    stats->articles_scanned = 0;
    stats->bytes_scanned = 0;
    for (const auto& p : partials) {
      stats->articles_scanned += p.scanned;
      stats->bytes_scanned += p.bytes;
    }
    stats->pairs = pairs;
    stats->seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  return links;
}

}  // namespace fame
