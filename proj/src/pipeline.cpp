#include "fame/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "fame/error.hpp"
#include "fame/hash.hpp"
#include "fame/log.hpp"

namespace fame {

std::string_view version() { return FAME_VERSION; }

nlohmann::ordered_json make_header(std::string_view config_text, std::uint64_t seed) {
  return {{"config_sha256", sha256_hex(config_text)}, {"seed", seed}, {"version", version()}};
}

void write_file_atomic(const std::string& path, std::string_view content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kInternal, "cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::kInternal, "short write to '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

void OutputSet::commit() const {
  for (const auto& [path, content] : files_) write_file_atomic(path, content);
}

// --- Funnel ----------------------------------------------------------------

namespace {

PhaseCounts phase_counts(const std::vector<std::size_t>& per_event, std::size_t distinct) {
  PhaseCounts c;
  c.articles = distinct;
  std::vector<std::size_t> nz;
  for (auto n : per_event) {
    c.pairs += n;
    if (n) nz.push_back(n);
  }
  c.events = nz.size();
  if (!nz.empty()) {
    std::sort(nz.begin(), nz.end());
    const std::size_t m = nz.size();
    c.median_per_event = m % 2 ? static_cast<double>(nz[m / 2])
                               : (static_cast<double>(nz[m / 2 - 1]) + static_cast<double>(nz[m / 2])) / 2;
    c.max_per_event = nz.back();
  }
  return c;
}

void add_window_counts(FunnelReport& rep, const EventStore& events, const Corpus& corpus, int after, int before) {
  std::set<std::size_t> in_window;
  for (const auto& r : events.records()) {
    const auto [b, e] = corpus.window_range(r.fingerprint.date, after, before);
    for (std::size_t i = b; i < e; ++i) in_window.insert(i);
  }
  for (auto& fl : rep.languages) {
    fl.window_articles = 0;
    for (auto i : in_window) {
      if (corpus.at(i).language == fl.language) ++fl.window_articles;
    }
  }
}

}  // namespace

FunnelReport compute_funnel(const LinkSet& links, const EventStore& events, const Corpus& corpus,
                            int window_days, int window_before_days) {
  FunnelReport rep;
  for (const auto& lang : corpus.languages()) {
    FunnelLanguage fl;
    fl.language = lang;
    fl.corpus_articles = corpus.language_partition(lang).size();
    std::vector<std::size_t> p1, p2;
    std::set<std::string> d1, d2;
    bool any_p2 = false;
    for (const auto& eid : links.event_ids()) {
      const EventLinks* l = links.find(eid);
      std::size_t n1 = 0, n2 = 0;
      for (const auto& a : l->phase1) {
        const Article* art = corpus.find(a);
        if (art && art->language == lang) {
          ++n1;
          d1.insert(a);
        }
      }
      if (l->phase2) {
        any_p2 = true;
        for (const auto& a : *l->phase2) {
          const Article* art = corpus.find(a);
          if (art && art->language == lang) {
            ++n2;
            d2.insert(a);
          }
        }
      }
      p1.push_back(n1);
      p2.push_back(n2);
    }
    fl.phase1 = phase_counts(p1, d1.size());
    if (any_p2) fl.phase2 = phase_counts(p2, d2.size());
    rep.languages.push_back(std::move(fl));
  }
  add_window_counts(rep, events, corpus, window_days, window_before_days);
  return rep;
}

namespace {

nlohmann::ordered_json counts_json(const PhaseCounts& c) {
  return {{"articles", c.articles},
          {"pairs", c.pairs},
          {"events", c.events},
          {"median_per_event", c.median_per_event},
          {"max_per_event", c.max_per_event}};
}

}  // namespace

nlohmann::ordered_json funnel_to_json(const FunnelReport& f) {
  nlohmann::ordered_json langs = nlohmann::ordered_json::array();
  for (const auto& l : f.languages) {
    nlohmann::ordered_json j = {{"language", l.language},
                                {"corpus_articles", l.corpus_articles},
                                {"window_articles", l.window_articles},
                                {"phase1", counts_json(l.phase1)}};
    j["phase2"] = l.phase2 ? counts_json(*l.phase2) : nlohmann::ordered_json(nullptr);
    langs.push_back(std::move(j));
  }
  return {{"languages", langs}};
}

std::string funnel_table(const FunnelReport& f) {
  std::ostringstream out;
  out << std::left << std::setw(6) << "Lang" << std::right << std::setw(12) << "Corpus" << std::setw(12) << "Window"
      << std::setw(12) << "Phase 1" << std::setw(10) << "Med." << std::setw(10) << "Max" << std::setw(12)
      << "Phase 2" << std::setw(10) << "Med." << std::setw(10) << "Max" << '\n';
  for (const auto& l : f.languages) {
    out << std::left << std::setw(6) << l.language << std::right << std::setw(12) << l.corpus_articles
        << std::setw(12) << l.window_articles << std::setw(12) << l.phase1.articles << std::setw(10)
        << l.phase1.median_per_event << std::setw(10) << l.phase1.max_per_event;
    if (l.phase2) {
      out << std::setw(12) << l.phase2->articles << std::setw(10) << l.phase2->median_per_event << std::setw(10)
          << l.phase2->max_per_event;
    } else {
      out << std::setw(12) << "-" << std::setw(10) << "-" << std::setw(10) << "-";
    }
    out << '\n';
  }
  return out.str();
}

std::vector<std::string> check_funnel(const LinkSet& links, const EventStore& events, const Corpus& corpus,
                                      int window_days, int window_before_days) {
  std::vector<std::string> out;
  for (const auto& eid : links.event_ids()) {
    const EventLinks* l = links.find(eid);
    const EventRecord* rec = events.find(eid);
    if (!rec) {
      out.push_back(eid + ": not in the event store");
      continue;
    }
    const auto [b, e] = corpus.window_range(rec->fingerprint.date, window_days, window_before_days);
    std::set<std::string> p1;
    for (const auto& a : l->phase1) {
      p1.insert(a);
      const auto idx = corpus.index_of(a);
      if (!idx) {
        out.push_back(eid + ": phase-1 article " + a + " is not in the corpus");
      } else if (*idx < b || *idx >= e) {
        out.push_back(eid + ": phase-1 article " + a + " is outside the event window");
      }
    }
    if (p1.size() != l->phase1.size()) out.push_back(eid + ": duplicate phase-1 articles");
    if (l->phase2) {
      for (const auto& a : *l->phase2) {
        if (!p1.count(a)) out.push_back(eid + ": phase-2 article " + a + " is not in phase 1");
      }
    }
  }
  return out;
}

// --- Full pipeline ---------------------------------------------------------

nlohmann::ordered_json PipelineConfig::to_json() const {
  return {{"events", events},
          {"events_format", events_format},
          {"column_mapping", column_mapping},
          {"strict", strict},
          {"gtd_salience", gtd_salience},
          {"corpus", corpus},
          {"blocklist", blocklist},
          {"languages", languages},
          {"lexicons", lexicons},
          {"scope", to_string(scope)},
          {"window_days", window_days},
          {"window_before_days", window_before_days},
          {"client", client},
          {"model", model},
          {"variant", to_string(variant)},
          {"prompt_aux", prompt_aux},
          {"indeterminate", indeterminate == IndeterminatePolicy::kKeep   ? "keep"
                            : indeterminate == IndeterminatePolicy::kDrop ? "drop"
                                                                          : "retry"},
          {"cache", cache},
          {"rate_per_second", rate_per_second},
          {"labels", labels},
          {"top_k", top_k},
          {"seed", seed}};
}

PipelineResult run_pipeline(const PipelineConfig& cfg, LlmClient* client_override) {
  if (cfg.events.empty()) throw Error(ErrorCode::kInvalidArgument, "no events file configured");
  if (cfg.corpus.empty()) throw Error(ErrorCode::kInvalidArgument, "no corpus configured");
  if (cfg.lexicons.empty()) throw Error(ErrorCode::kInvalidArgument, "no lexicon configured");
  PipelineResult res;

  EventLoadOptions eo;
  if (!cfg.column_mapping.empty()) eo.mapping = ColumnMapping::parse(cfg.column_mapping);
  eo.strict = cfg.strict;
  auto loaded = load_events(cfg.events, parse_event_format(cfg.events_format), eo);
  if (!loaded.rejected.empty()) {
    log::warn("ingest.rejected_rows", {{"count", loaded.rejected.size()}});
  }
  res.events = cfg.gtd_salience ? filter_gtd_salience(loaded.store) : std::move(loaded.store);

  CorpusLoadOptions co;
  co.jobs = cfg.jobs;
  if (!cfg.languages.empty()) co.filters.languages = std::set<std::string>(cfg.languages.begin(), cfg.languages.end());
  if (!cfg.blocklist.empty()) co.filters.blocked_hosts = load_blocklist(cfg.blocklist);
  std::vector<Article> articles;
  for (const auto& path : cfg.corpus) {
    auto c = load_corpus(path, co);
    log::info("ingest.corpus", {{"path", path}, {"loaded", c.stats.loaded}, {"dropped_host", c.stats.dropped_host},
                                {"malformed", c.stats.malformed}});
    if (cfg.corpus.size() == 1) {
      res.corpus = std::move(c.corpus);
      break;
    }
    articles.insert(articles.end(), c.corpus.articles().begin(), c.corpus.articles().end());
  }
  if (cfg.corpus.size() > 1) res.corpus = Corpus::build(std::move(articles), {nullptr, cfg.jobs});

  std::vector<PatternAutomaton> automata;
  for (const auto& path : cfg.lexicons) automata.push_back(PatternAutomaton::compile(load_lexicon(path)));
  std::vector<const PatternAutomaton*> ptrs;
  for (const auto& a : automata) ptrs.push_back(&a);
  PhaseOneOptions p1;
  p1.scope = cfg.scope;
  p1.window_days = cfg.window_days;
  p1.window_before_days = cfg.window_before_days;
  p1.jobs = cfg.jobs;
  const LinkSet phase1 = phase_one_batch(res.events, res.corpus, ptrs, p1, &res.phase1_stats);
  log::info("match.done", {{"pairs", res.phase1_stats.pairs}, {"seconds", res.phase1_stats.seconds}});

  std::unique_ptr<LlmClient> owned;
  LlmClient* client = client_override;
  if (!client) {
    owned = make_client(cfg.client, cfg.model);
    client = owned.get();
  }
  std::optional<ResponseCache> cache;
  if (!cfg.cache.empty()) cache.emplace(cfg.cache);
  PhaseTwoOptions p2;
  p2.prompt = cfg.prompt_aux.empty() ? PromptTemplate::builtin(cfg.variant) : PromptTemplate::load(cfg.prompt_aux, cfg.variant);
  p2.indeterminate = cfg.indeterminate;
  p2.jobs = cfg.jobs;
  p2.rate_per_second = cfg.rate_per_second;
  p2.cache = cache ? &*cache : nullptr;
  auto filtered = phase_two(phase1, res.events, res.corpus, *client, p2);
  res.links = std::move(filtered.links);
  res.verdicts = std::move(filtered.verdicts);
  res.phase2_stats = filtered.stats;
  log::info("filter.done", {{"keep", res.phase2_stats.keep}, {"drop", res.phase2_stats.drop},
                            {"indeterminate", res.phase2_stats.indeterminate},
                            {"client_calls", res.phase2_stats.client_calls}});

  const auto violations = check_funnel(res.links, res.events, res.corpus, cfg.window_days, cfg.window_before_days);
  if (!violations.empty()) {
    throw Error(ErrorCode::kInternal, "funnel invariant violated", {{"violations", violations}});
  }
  res.funnel = compute_funnel(res.links, res.events, res.corpus, cfg.window_days, cfg.window_before_days);
  res.ranking = rank_events(res.links, res.events, cfg.top_k);
  if (!cfg.labels.empty()) res.evaluation = score(res.links, load_labels(cfg.labels));
  return res;
}

OutputSet pipeline_outputs(const PipelineResult& r, const PipelineConfig& cfg, const std::string& out_dir) {
  const auto header = make_header(cfg.canonical(), cfg.seed);
  const std::string dir = out_dir.empty() ? "." : out_dir;
  OutputSet out;
  std::ostringstream links;
  r.links.write_jsonl(links, header);
  out.add(dir + "/links.jsonl", links.str());
  std::ostringstream verdicts;
  write_verdicts_jsonl(r.verdicts, verdicts, header);
  out.add(dir + "/verdicts.jsonl", verdicts.str());
  auto with_header = [&](nlohmann::ordered_json body) {
    nlohmann::ordered_json j = {{"fame_header", header}};
    for (auto& [k, v] : body.items()) j[k] = v;
    return j.dump(2) + "\n";
  };
  out.add(dir + "/funnel.json", with_header(funnel_to_json(r.funnel)));
  out.add(dir + "/ranking.json", with_header({{"ranking", ranking_to_json(r.ranking)}}));
  if (r.evaluation) out.add(dir + "/eval.json", with_header(report_to_json(*r.evaluation)));
  return out;
}

}  // namespace fame
