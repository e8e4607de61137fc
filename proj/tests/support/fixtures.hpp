#pragma once

// Seeded generators for randomized test fixtures.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fame/corpus.hpp"
#include "fame/event_store.hpp"
#include "fame/lexicon.hpp"
#include "fame/matcher.hpp"

namespace fame::fixture {

struct MatcherSpec {
  std::size_t max_articles = 5000;
  std::size_t max_events = 50;
  std::size_t max_keywords = 10000;
  // Draw sizes log-uniformly up to the maxima (most fixtures are small).
  bool log_uniform_sizes = true;
};

struct MatcherFixture {
  EventStore events;
  Corpus corpus;
  std::vector<KeywordLexicon> lexicons;  // one per language
  PhaseOneOptions options;
  std::size_t keywords = 0;
};

// Random lexicons over invented words (with some non-ASCII ones), articles
// that plant keywords next to boundary and non-boundary characters in mixed
// case, and events over a 90-day range, some sharing a fingerprint.
MatcherFixture random_matcher_fixture(std::uint64_t seed, const MatcherSpec& spec = {});

struct ThroughputFixture {
  EventStore events;
  Corpus corpus;
  KeywordLexicon lexicon;
  int window_days = 7;  // windows of consecutive events touch
};

// `articles` English articles of roughly `words` body words spread over a
// year, a lexicon of about `patterns` keywords, and `events` events whose
// windows together cover the whole range.
ThroughputFixture throughput_fixture(std::uint64_t seed, std::size_t articles, std::size_t patterns,
                                     std::size_t events, std::size_t words = 60);

// Lowercase ASCII pseudo-word of 3–9 letters.
std::string pseudo_word(std::mt19937_64& rng);

}  // namespace fame::fixture
