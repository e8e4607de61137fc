#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fame/corpus.hpp"
#include "fame/event_store.hpp"
#include "fame/lexicon.hpp"
#include "fame/link_set.hpp"
#include "fame/text.hpp"

namespace fame {

enum class TagKind : std::uint8_t { kClass, kLocation };

struct KeywordTag {
  TagKind kind;
  std::string key;
  friend auto operator<=>(const KeywordTag&, const KeywordTag&) = default;
};

enum class MatchScope { kTitleOnly, kTitlePlusHead, kTitlePlusBody };
std::string_view to_string(MatchScope s);
MatchScope parse_match_scope(std::string_view s);

// Aho–Corasick automaton compiled to a full DFA over a compressed byte
// alphabet. Hits are reported only when the occurrence is token-bounded
// (see text::is_token_bounded), so "storm" does not hit inside "storms".
class PatternAutomaton {
 public:
  struct Entry {
    std::string keyword;  // match-normalized
    KeywordTag tag;
  };
  struct Match {
    std::uint32_t pattern;
    std::uint32_t begin;
    std::uint32_t end;
  };

  // Throws kInvalidArgument when the lexicon has no keywords. Every set of
  // the lexicon gets a tag, so an empty set resolves but never matches.
  static PatternAutomaton compile(const KeywordLexicon& lexicon);
  // `extra_tags` are registered even if no entry carries them.
  static PatternAutomaton compile(std::string language, std::vector<Entry> entries,
                                  std::vector<KeywordTag> extra_tags = {});

  const std::string& language() const { return language_; }
  std::size_t pattern_count() const { return patterns_.size(); }
  std::size_t state_count() const { return terminal_.size(); }
  std::size_t alphabet_size() const { return num_classes_; }
  double compile_millis() const { return compile_millis_; }

  std::optional<std::uint32_t> tag_id(TagKind kind, std::string_view key) const;
  const KeywordTag& tag(std::uint32_t id) const { return tags_[id]; }
  std::size_t tag_count() const { return tags_.size(); }
  const std::string& pattern(std::uint32_t id) const { return patterns_[id]; }
  std::span<const std::uint32_t> pattern_tags(std::uint32_t pattern) const {
    return {tag_list_.data() + tag_offsets_[pattern], tag_offsets_[pattern + 1] - tag_offsets_[pattern]};
  }

  // on_hit(pattern_id, begin, end) for every bounded occurrence, ordered by
  // end offset (then by decreasing length).
  template <class F>
  void scan(std::string_view text, F&& on_hit) const;
  std::vector<Match> find_all(std::string_view text) const;

 private:
  std::string language_;
  std::uint32_t num_classes_ = 1;
  std::uint8_t byte_class_[256] = {};
  std::vector<std::uint32_t> delta_;
  std::vector<std::int32_t> terminal_;
  std::vector<std::uint32_t> dict_link_;
  std::vector<std::uint8_t> has_output_;
  std::vector<std::string> patterns_;
  std::vector<std::uint32_t> tag_offsets_;
  std::vector<std::uint32_t> tag_list_;
  std::vector<KeywordTag> tags_;
  std::map<KeywordTag, std::uint32_t, std::less<>> tag_index_;
  double compile_millis_ = 0;
};

template <class F>
void PatternAutomaton::scan(std::string_view text, F&& on_hit) const {
  const auto* p = reinterpret_cast<const unsigned char*>(text.data());
  const std::size_t n = text.size();
  const std::uint32_t k = num_classes_;
  const std::uint32_t* delta = delta_.data();
  const std::uint8_t* has_output = has_output_.data();
  std::uint32_t s = 0;
  for (std::size_t i = 0; i < n; ++i) {
    s = delta[static_cast<std::size_t>(s) * k + byte_class_[p[i]]];
    if (!has_output[s]) continue;
    std::uint32_t t = s;
    do {
      const std::int32_t pid = terminal_[t];
      if (pid >= 0) {
        const std::size_t len = patterns_[static_cast<std::size_t>(pid)].size();
        const std::size_t begin = i + 1 - len;
        if (text::is_token_bounded(text, begin, i + 1)) {
          on_hit(static_cast<std::uint32_t>(pid), static_cast<std::uint32_t>(begin),
                 static_cast<std::uint32_t>(i + 1));
        }
      }
      t = dict_link_[t];
    } while (t != 0);
  }
}

struct PhaseOneOptions {
  MatchScope scope = MatchScope::kTitlePlusBody;
  int window_days = 7;
  int window_before_days = 0;
  int jobs = 1;
  bool keep_evidence = true;
  std::size_t evidence_cap = 32;
};

struct PhaseOneResult {
  std::vector<std::string> article_ids;  // (publish_date, id) order
  std::map<std::string, std::vector<std::string>> evidence;
};

struct PhaseOneStats {
  std::size_t fingerprints = 0;
  std::size_t articles_scanned = 0;
  std::size_t bytes_scanned = 0;
  std::size_t pairs = 0;
  double seconds = 0;
};

// Articles in the event's window, in the automaton's language, whose scoped
// text has a keyword tagged (location, country) and one tagged (class, c).
// Throws kMissingKey when the lexicon behind `automaton` lacks either key.
PhaseOneResult phase_one(const EventFingerprint& event, const Corpus& corpus,
                         const PatternAutomaton& automaton, const PhaseOneOptions& options = {});

// Same result as calling phase_one per record, computed in one pass over the
// corpus. Each article is handled by the automaton for its language (others
// are skipped). Records sharing a fingerprint get identical entries flagged
// with their collision group.
LinkSet phase_one_batch(const EventStore& events, const Corpus& corpus,
                        std::span<const PatternAutomaton* const> automata,
                        const PhaseOneOptions& options = {}, PhaseOneStats* stats = nullptr);
LinkSet phase_one_batch(const EventStore& events, const Corpus& corpus,
                        const PatternAutomaton& automaton, const PhaseOneOptions& options = {},
                        PhaseOneStats* stats = nullptr);

}  // namespace fame
