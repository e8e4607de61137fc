#include "fame/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fame/country_table.hpp"
#include "fame/embedded.hpp"
#include "fame/error.hpp"
#include "fame/log.hpp"
#include "fame/parallel.hpp"
#include "fame/text.hpp"

namespace fame {
namespace {

bool is_terminator(char32_t c) { return c == '.' || c == '!' || c == '?' || c == 0x2026; }

bool is_closer(char32_t c) {
  return c == '"' || c == '\'' || c == ')' || c == ']' || c == 0x201D || c == 0x2019 ||
         c == 0x00BB;
}

bool is_opener(char32_t c) {
  return c == '"' || c == '\'' || c == '(' || c == '[' || c == 0x201C || c == 0x2018 ||
         c == 0x00AB || c == 0x00BF || c == 0x00A1;
}

std::string primary_language(std::string_view tag) {
  auto t = text::trim(tag);
  const auto dash = t.find_first_of("-_");
  if (dash != std::string_view::npos) t = t.substr(0, dash);
  return text::ascii_lower(t);
}

}  // namespace

// --- SentenceSegmenter -----------------------------------------------------

void SentenceSegmenter::add_abbreviations(const std::string& language,
                                          std::string_view content) {
  auto& set = abbreviations_[language];
  std::istringstream in{std::string(content)};
  std::string line;
  while (std::getline(in, line)) {
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    set.insert(text::normalize_match(t));
  }
}

void SentenceSegmenter::load_abbreviations(const std::string& language,
                                           const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open abbreviation list " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  add_abbreviations(language, ss.str());
}

const SentenceSegmenter& SentenceSegmenter::default_instance() {
  static const SentenceSegmenter instance = [] {
    SentenceSegmenter s;
    for (const char* lang : {"en", "es", "fr"}) {
      s.add_abbreviations(lang, embedded_data(std::string("abbreviations/") + lang + ".txt"));
    }
    return s;
  }();
  return instance;
}

bool SentenceSegmenter::is_abbreviation(std::string_view word,
                                        std::string_view language) const {
  auto it = abbreviations_.find(std::string(language));
  if (it == abbreviations_.end()) return false;
  return it->second.count(text::normalize_match(word)) > 0;
}

std::vector<std::string> SentenceSegmenter::split(std::string_view s, std::string_view language,
                                                  std::size_t max_sentences) const {
  std::vector<std::string> out;
  std::size_t start = 0;
  std::size_t pos = 0;
  auto emit = [&](std::size_t end) {
    const auto piece = text::trim(s.substr(start, end - start));
    if (!piece.empty()) out.emplace_back(piece);
  };
  while (pos < s.size() && out.size() < max_sentences) {
    const std::size_t cp_start = pos;
    const char32_t c = text::decode_next(s, pos);
    if (!is_terminator(c)) continue;

    // Consume the whole terminator run and any closing quotes.
    bool lone_period = c == '.';
    std::size_t end = pos;
    while (end < s.size()) {
      std::size_t p = end;
      const char32_t n = text::decode_next(s, p);
      if (is_terminator(n)) {
        lone_period = false;
        end = p;
      } else if (is_closer(n)) {
        end = p;
      } else {
        break;
      }
    }
    pos = end;
    if (end >= s.size() || s[end] != ' ') continue;
    std::size_t after = end + 1;
    if (after >= s.size()) continue;
    const char32_t next = text::decode_next(s, after);
    if (!text::is_upper(next) && !is_opener(next)) continue;

    if (lone_period) {
      const std::size_t word_begin = s.rfind(' ', cp_start);
      const std::size_t wb = word_begin == std::string_view::npos ? 0 : word_begin + 1;
      const auto word = s.substr(wb, cp_start + 1 - wb);
      if (is_abbreviation(word, language)) continue;
    }
    emit(end);
    start = end + 1;
  }
  if (out.size() < max_sentences && start < s.size()) emit(s.size());
  return out;
}

ArticleHead extract_head(const Article& article, const SentenceSegmenter& segmenter) {
  ArticleHead head;
  head.article_id = article.id;
  head.title = text::normalize_display(article.title);
  head.lead_sentences = segmenter.split(text::normalize_display(article.body), article.language, 3);
  return head;
}

// --- Corpus ----------------------------------------------------------------

Corpus Corpus::build(std::vector<Article> articles, const BuildOptions& options) {
  const SentenceSegmenter& seg =
      options.segmenter ? *options.segmenter : SentenceSegmenter::default_instance();
  for (auto& a : articles) {
    a.language = primary_language(a.language);
    if (a.language.empty()) throw Error(ErrorCode::kInvalidArgument, "article " + a.id + " has no language");
    if (a.id.empty()) throw Error(ErrorCode::kInvalidArgument, "article with empty id");
  }
  std::sort(articles.begin(), articles.end(), [](const Article& a, const Article& b) {
    if (a.publish_date != b.publish_date) return a.publish_date < b.publish_date;
    return a.id < b.id;
  });
  for (std::size_t i = 1; i < articles.size(); ++i) {
    if (articles[i].id == articles[i - 1].id) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate article id " + articles[i].id);
    }
  }

  Corpus c;
  c.articles_ = std::move(articles);
  c.by_id_.reserve(c.articles_.size());
  for (std::size_t i = 0; i < c.articles_.size(); ++i) {
    if (!c.by_id_.emplace(c.articles_[i].id, i).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate article id " + c.articles_[i].id);
    }
    c.by_language_[c.articles_[i].language].push_back(i);
  }
  c.match_.resize(c.articles_.size());
  parallel_chunks(c.articles_.size(), options.jobs, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const Article& a = c.articles_[i];
      MatchText& m = c.match_[i];
      m.title = text::normalize_match(a.title);
      m.body = text::normalize_match(a.body);
      const auto leads = seg.split(text::normalize_display(a.body), a.language, 3);
      std::string joined;
      for (const auto& l : leads) {
        if (!joined.empty()) joined.push_back(' ');
        joined += l;
      }
      m.head = text::normalize_match(joined);
    }
  });
  return c;
}

std::optional<std::size_t> Corpus::index_of(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

const Article* Corpus::find(std::string_view id) const {
  auto i = index_of(id);
  return i ? &articles_[*i] : nullptr;
}

std::pair<std::size_t, std::size_t> Corpus::window_range(Date t, int after_days,
                                                         int before_days) const {
  const Date lo = t - before_days;
  const Date hi = t + after_days;
  auto first = std::lower_bound(articles_.begin(), articles_.end(), lo,
                                [](const Article& a, Date d) { return a.publish_date < d; });
  auto last = std::upper_bound(first, articles_.end(), hi,
                               [](Date d, const Article& a) { return d < a.publish_date; });
  return {static_cast<std::size_t>(first - articles_.begin()),
          static_cast<std::size_t>(last - articles_.begin())};
}

std::vector<std::string> Corpus::slice_window(Date t, int after_days, int before_days) const {
  if (after_days < 0 || before_days < 0) {
    throw Error(ErrorCode::kInvalidArgument, "window spans must be nonnegative");
  }
  const auto [b, e] = window_range(t, after_days, before_days);
  std::vector<std::string> ids;
  ids.reserve(e - b);
  for (std::size_t i = b; i < e; ++i) ids.push_back(articles_[i].id);
  return ids;
}

std::vector<std::string> Corpus::languages() const {
  std::vector<std::string> out;
  for (const auto& [lang, idx] : by_language_) out.push_back(lang);
  return out;
}

std::span<const std::size_t> Corpus::language_partition(std::string_view language) const {
  auto it = by_language_.find(language);
  if (it == by_language_.end()) return {};
  return it->second;
}

std::optional<Date> Corpus::min_date() const {
  if (articles_.empty()) return std::nullopt;
  return articles_.front().publish_date;
}

std::optional<Date> Corpus::max_date() const {
  if (articles_.empty()) return std::nullopt;
  return articles_.back().publish_date;
}

// --- Loading ---------------------------------------------------------------

std::string url_host(std::string_view url) {
  auto u = text::trim(url);
  const auto scheme = u.find("://");
  if (scheme != std::string_view::npos) {
    const std::string name = text::ascii_lower(u.substr(0, scheme));
    if (name != "http" && name != "https") return {};
    u.remove_prefix(scheme + 3);
  } else {
    // Schemeless "host/path" is accepted; "mailto:x" style URIs are not.
    const auto colon = u.find(':');
    if (colon != std::string_view::npos && u.substr(0, colon).find('.') == std::string_view::npos) return {};
  }
  const auto end = u.find_first_of("/?#");
  if (end != std::string_view::npos) u = u.substr(0, end);
  const auto at = u.rfind('@');
  if (at != std::string_view::npos) u.remove_prefix(at + 1);
  const auto colon = u.find(':');
  if (colon != std::string_view::npos) u = u.substr(0, colon);
  std::string host = text::ascii_lower(u);
  while (!host.empty() && host.back() == '.') host.pop_back();
  return host;
}

bool host_blocked(std::string_view host, const std::set<std::string>& blocklist) {
  if (host.empty()) return false;
  std::string_view h = host;
  while (true) {
    if (blocklist.count(std::string(h))) return true;
    const auto dot = h.find('.');
    if (dot == std::string_view::npos) return false;
    h.remove_prefix(dot + 1);
  }
}

std::set<std::string> load_blocklist(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open blocklist " + path);
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    out.insert(text::ascii_lower(t));
  }
  return out;
}

nlohmann::json article_to_json(const Article& a) {
  nlohmann::json j = {{"id", a.id},
                      {"language", a.language},
                      {"publish_date", a.publish_date.iso()},
                      {"title", a.title},
                      {"body", a.body}};
  if (a.url) j["url"] = *a.url;
  if (a.outlet_country) j["outlet_country"] = *a.outlet_country;
  return j;
}

namespace {

struct ShardResult {
  std::vector<Article> articles;
  CorpusLoadStats stats;
  std::optional<Error> failure;
};

std::string required_string(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw Error(ErrorCode::kParse, std::string("missing or non-string field '") + key + "'");
  }
  return it->get<std::string>();
}

std::optional<std::string> optional_string(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw Error(ErrorCode::kParse, std::string("field '") + key + "' is not a string");
  }
  auto s = it->get<std::string>();
  if (text::trim(s).empty()) return std::nullopt;
  return s;
}

void parse_shard(std::istream& in, const std::string& name, const CorpusLoadOptions& opt,
                 ShardResult& out) {
  std::string line;
  std::size_t line_no = 0;
  const auto& f = opt.filters;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    ++out.stats.lines;
    Article a;
    try {
      const auto j = nlohmann::json::parse(line);
      if (!j.is_object()) throw Error(ErrorCode::kParse, "line is not a JSON object");
      a.id = required_string(j, "id");
      a.language = primary_language(required_string(j, "language"));
      if (a.id.empty() || a.language.empty()) throw Error(ErrorCode::kParse, "empty id or language");
      a.publish_date = Date::parse_or_throw(required_string(j, "publish_date"));
      a.title = required_string(j, "title");
      a.body = required_string(j, "body");
      a.url = optional_string(j, "url");
      a.outlet_country = optional_string(j, "outlet_country");
      if (a.outlet_country && opt.countries) {
        if (auto code = opt.countries->resolve(*a.outlet_country)) a.outlet_country = *code;
      }
    } catch (const std::exception& e) {
      ++out.stats.malformed;
      if (opt.malformed == MalformedPolicy::kFail) {
        out.failure = Error(ErrorCode::kParse,
                            name + ":" + std::to_string(line_no) + ": " + e.what(),
                            {{"shard", name}, {"line", line_no}});
        return;
      }
      continue;
    }
    if (f.languages && !f.languages->count(a.language)) {
      ++out.stats.dropped_language;
      continue;
    }
    if ((f.from && a.publish_date < *f.from) || (f.to && a.publish_date > *f.to)) {
      ++out.stats.dropped_date;
      continue;
    }
    if (a.url && !f.blocked_hosts.empty() && host_blocked(url_host(*a.url), f.blocked_hosts)) {
      ++out.stats.dropped_host;
      continue;
    }
    out.articles.push_back(std::move(a));
  }
}

void accumulate(CorpusLoadStats& total, const CorpusLoadStats& s) {
  total.lines += s.lines;
  total.malformed += s.malformed;
  total.dropped_language += s.dropped_language;
  total.dropped_date += s.dropped_date;
  total.dropped_host += s.dropped_host;
}

CorpusLoadResult merge(std::vector<ShardResult>& shards, const CorpusLoadOptions& opt) {
  CorpusLoadResult result;
  result.stats.shards = shards.size();
  std::vector<Article> all;
  std::unordered_map<std::string, bool> seen;
  for (auto& s : shards) {
    if (s.failure) throw *s.failure;
    accumulate(result.stats, s.stats);
    for (auto& a : s.articles) {
      if (!seen.emplace(a.id, true).second) {
        ++result.stats.duplicate_ids;
        if (opt.malformed == MalformedPolicy::kFail) {
          throw Error(ErrorCode::kParse, "duplicate article id " + a.id);
        }
        continue;
      }
      all.push_back(std::move(a));
    }
  }
  result.stats.loaded = all.size();
  result.corpus = Corpus::build(std::move(all), {opt.segmenter, opt.jobs});
  if (result.stats.malformed || result.stats.duplicate_ids) {
    log::warn("corpus_malformed_lines",
              {{"malformed", result.stats.malformed}, {"duplicate_ids", result.stats.duplicate_ids}});
  }
  return result;
}

}  // namespace

CorpusLoadResult load_corpus(const std::string& path, const CorpusLoadOptions& options) {
  namespace fs = std::filesystem;
  std::vector<std::string> files;
  std::error_code ec;
  if (fs::is_directory(path, ec)) {
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
        files.push_back(entry.path().string());
      }
    }
    std::sort(files.begin(), files.end());
  } else if (fs::is_regular_file(path, ec)) {
    files.push_back(path);
  } else {
    throw Error(ErrorCode::kNotFound, "corpus path " + path + " does not exist", {{"path", path}});
  }

  std::vector<ShardResult> shards(files.size());
  parallel_chunks(files.size(), options.jobs, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      std::ifstream in(files[i], std::ios::binary);
      if (!in) {
        shards[i].failure = Error(ErrorCode::kNotFound, "cannot open shard " + files[i]);
        continue;
      }
      parse_shard(in, files[i], options, shards[i]);
    }
  });
  return merge(shards, options);
}

CorpusLoadResult load_corpus_from_string(std::string_view content,
                                         const CorpusLoadOptions& options) {
  std::vector<ShardResult> shards(1);
  std::istringstream in{std::string(content)};
  parse_shard(in, "<string>", options, shards[0]);
  return merge(shards, options);
}

}  // namespace fame
