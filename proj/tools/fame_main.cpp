// fame: command-line front end for the linking pipeline and its analyses.
//
// Every subcommand reads its options from flags or from a config file given
// with --config (TOML/INI; keys of a subcommand go in the section of the
// same name). Outputs are staged in memory and written atomically at the
// end, so a failing command leaves no partial files.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fame/attention.hpp"
#include "fame/corpus.hpp"
#include "fame/embedded.hpp"
#include "fame/error.hpp"
#include "fame/evalkit.hpp"
#include "fame/event_store.hpp"
#include "fame/lexicon.hpp"
#include "fame/link_set.hpp"
#include "fame/llm_client.hpp"
#include "fame/llm_filter.hpp"
#include "fame/log.hpp"
#include "fame/matcher.hpp"
#include "fame/pipeline.hpp"

namespace {

using fame::Error;
using fame::ErrorCode;
using json = nlohmann::ordered_json;

struct Globals {
  int jobs = 1;
  std::uint64_t seed = 0;
  std::string log_level = "info";
};

std::string config_text;  // effective options, hashed into output headers

json header(const Globals& g) { return fame::make_header(config_text, g.seed); }

std::string with_header(const Globals& g, json body) {
  json j = {{"fame_header", header(g)}};
  for (auto& [k, v] : body.items()) j[k] = v;
  return j.dump(2) + "\n";
}

fame::EventStore read_events(const std::string& path, const std::string& format, const std::string& mapping,
                             bool strict) {
  fame::EventLoadOptions o;
  if (!mapping.empty()) o.mapping = fame::ColumnMapping::parse(mapping);
  o.strict = strict;
  auto r = fame::load_events(path, fame::parse_event_format(format), o);
  if (!r.rejected.empty()) fame::log::warn("ingest.rejected_rows", {{"count", r.rejected.size()}});
  return std::move(r.store);
}

struct CorpusArgs {
  std::vector<std::string> paths;
  std::vector<std::string> languages;
  std::string from, to, blocklist;
  bool fail_on_malformed = false;

  void add(CLI::App* app, bool required = true) {
    auto* o = app->add_option("--corpus", paths, "JSONL shard or directory of shards (repeatable)");
    if (required) o->required();
    app->add_option("--languages", languages, "Keep only these language tags")->delimiter(',');
    app->add_option("--from", from, "Earliest publish date kept (YYYY-MM-DD)");
    app->add_option("--to", to, "Latest publish date kept (YYYY-MM-DD)");
    app->add_option("--blocklist", blocklist, "File of blocked URL hosts, one per line");
    app->add_flag("--fail-on-malformed", fail_on_malformed, "Fail instead of skipping malformed lines");
  }

  fame::CorpusLoadOptions options(int jobs) const {
    fame::CorpusLoadOptions o;
    o.jobs = jobs;
    if (!languages.empty()) o.filters.languages = std::set<std::string>(languages.begin(), languages.end());
    if (!from.empty()) o.filters.from = fame::Date::parse_or_throw(from);
    if (!to.empty()) o.filters.to = fame::Date::parse_or_throw(to);
    if (!blocklist.empty()) o.filters.blocked_hosts = fame::load_blocklist(blocklist);
    o.malformed = fail_on_malformed ? fame::MalformedPolicy::kFail : fame::MalformedPolicy::kSkip;
    return o;
  }

  fame::CorpusLoadResult load(int jobs) const {
    const auto o = options(jobs);
    if (paths.size() == 1) return fame::load_corpus(paths.front(), o);
    fame::CorpusLoadResult all;
    std::vector<fame::Article> articles;
    for (const auto& p : paths) {
      auto r = fame::load_corpus(p, o);
      all.stats.shards += r.stats.shards;
      all.stats.lines += r.stats.lines;
      all.stats.malformed += r.stats.malformed;
      all.stats.dropped_language += r.stats.dropped_language;
      all.stats.dropped_date += r.stats.dropped_date;
      all.stats.dropped_host += r.stats.dropped_host;
      all.stats.duplicate_ids += r.stats.duplicate_ids;
      articles.insert(articles.end(), r.corpus.articles().begin(), r.corpus.articles().end());
    }
    all.corpus = fame::Corpus::build(std::move(articles), {nullptr, jobs});
    all.stats.loaded = all.corpus.size();
    return all;
  }
};

struct EventArgs {
  std::string path, format = "csv", mapping;
  bool strict = false;

  void add(CLI::App* app) {
    app->add_option("--events", path, "Events file")->required();
    app->add_option("--events-format", format, "csv or jsonl");
    app->add_option("--mapping", mapping, "Column mapping, e.g. class=Disaster Type,country=ISO");
    app->add_flag("--strict", strict, "Fail on any rejected row");
  }
  fame::EventStore load() const { return read_events(path, format, mapping, strict); }
};

json stats_json(const fame::CorpusLoadStats& s) {
  return {{"shards", s.shards},           {"lines", s.lines},
          {"loaded", s.loaded},           {"malformed", s.malformed},
          {"duplicate_ids", s.duplicate_ids}, {"dropped_language", s.dropped_language},
          {"dropped_date", s.dropped_date}, {"dropped_host", s.dropped_host}};
}

fame::Phase phase_arg(const std::string& s) {
  if (s == "1" || s == "phase1") return fame::Phase::kPhase1;
  if (s == "2" || s == "phase2") return fame::Phase::kPhase2;
  throw Error(ErrorCode::kInvalidArgument, "phase must be phase1 or phase2");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FAME: link critical events to news articles and analyze their coverage"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI config file; subcommand keys go in a section of the same name");
  Globals g;
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "Seed recorded in every output header and used for sampling");
  app.add_option("--log-level", g.log_level, "debug, info, warn, error, or off")
      ->check(CLI::IsMember({"debug", "info", "warn", "error", "off"}));

  fame::OutputSet outputs;
  std::vector<std::function<void()>> actions;

  // ingest ------------------------------------------------------------------
  auto* ingest = app.add_subcommand("ingest", "Validate and normalize events and/or a corpus");
  struct {
    std::string events, format = "csv", mapping, out_events, collisions, out_corpus, corpus_stats;
    bool strict = false, gtd = false;
    CorpusArgs corpus;
  } in;
  ingest->add_option("--events", in.events, "Events file");
  ingest->add_option("--events-format", in.format, "csv or jsonl");
  ingest->add_option("--mapping", in.mapping, "Column mapping");
  ingest->add_flag("--strict", in.strict, "Fail on any rejected row");
  ingest->add_flag("--gtd-salience", in.gtd, "Apply the GTD casualty salience filter");
  ingest->add_option("--out-events", in.out_events, "Normalized events JSONL");
  ingest->add_option("--collisions", in.collisions, "Fingerprint collision report JSON");
  in.corpus.add(ingest, false);
  ingest->add_option("--out-corpus", in.out_corpus, "Normalized corpus JSONL");
  ingest->add_option("--corpus-stats", in.corpus_stats, "Corpus load statistics JSON");
  ingest->callback([&] {
    actions.push_back([&] {
      if (in.events.empty() && in.corpus.paths.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "ingest needs --events and/or --corpus");
      }
      if (!in.events.empty()) {
        fame::EventStore store = read_events(in.events, in.format, in.mapping, in.strict);
        if (in.gtd) store = fame::filter_gtd_salience(store);
        const auto report = fame::check_fingerprint_collisions(store);
        std::ostringstream ev;
        ev << nlohmann::json{{"fame_header", header(g)}}.dump() << '\n';
        fame::save_events_jsonl(store, ev);
        if (!in.out_events.empty()) outputs.add(in.out_events, ev.str());
        if (!in.collisions.empty()) {
          outputs.add(in.collisions, with_header(g, {{"collisions", json(fame::collision_report_json(report))}}));
        }
        std::cout << json{{"events", store.size()}, {"collisions", report.size()}}.dump() << '\n';
      }
      if (!in.corpus.paths.empty()) {
        auto r = in.corpus.load(g.jobs);
        std::ostringstream co;
        for (const auto& a : r.corpus.articles()) co << fame::article_to_json(a).dump() << '\n';
        if (!in.out_corpus.empty()) outputs.add(in.out_corpus, co.str());
        if (!in.corpus_stats.empty()) outputs.add(in.corpus_stats, with_header(g, {{"stats", stats_json(r.stats)}}));
        std::cout << stats_json(r.stats).dump() << '\n';
      }
    });
  });

  // lexicon -----------------------------------------------------------------
  auto* lexicon = app.add_subcommand("lexicon", "Build a keyword lexicon for one language");
  struct {
    std::string language = "en", country_info, admin1, cities, classes, affixes, extra, out, sampler, model;
    std::size_t top_cities = 5000, vote_runs = 0;
    double vote_threshold = 0.5;
    bool vote_locations = false;
    std::vector<std::string> countries;
  } lx;
  lexicon->add_option("--language", lx.language, "Language tag");
  lexicon->add_option("--country-info", lx.country_info, "Gazetteer CSV alpha3,name,demonyms[,alt_names]")->required();
  lexicon->add_option("--admin1", lx.admin1, "Gazetteer CSV alpha3,admin1")->required();
  lexicon->add_option("--cities", lx.cities, "Gazetteer CSV city,alpha3,population")->required();
  lexicon->add_option("--top-cities", lx.top_cities, "Global population rank cutoff for cities");
  lexicon->add_option("--classes", lx.classes, "Class wordlist CSV class,word (default: shipped list)");
  lexicon->add_option("--affixes", lx.affixes, "Affix rules JSON (default: shipped rules)");
  lexicon->add_option("--extra-keywords", lx.extra, "CSV kind,key,keyword added with manual provenance");
  lexicon->add_option("--countries", lx.countries, "Restrict location sets to these codes")->delimiter(',');
  lexicon->add_option("--vote-runs", lx.vote_runs, "LLM sampling runs for vote expansion (0 disables)");
  lexicon->add_option("--vote-threshold", lx.vote_threshold, "Fraction of runs a candidate must appear in");
  lexicon->add_flag("--vote-locations", lx.vote_locations, "Also expand location sets");
  lexicon->add_option("--sampler-client", lx.sampler, "Client for vote expansion: mock:<path> or http[:url]");
  lexicon->add_option("--model", lx.model, "Model id for the sampler client");
  lexicon->add_option("--out", lx.out, "Lexicon JSON")->required();
  lexicon->callback([&] {
    actions.push_back([&] {
      const auto gaz = fame::Gazetteer::load(lx.country_info, lx.admin1, lx.cities);
      const auto rules = lx.affixes.empty() ? fame::AffixRules::builtin(lx.language) : fame::AffixRules::load(lx.affixes);
      const auto words = lx.classes.empty()
                             ? fame::parse_wordlist(fame::embedded_data("lexicon/" + lx.language + "/classes.csv"))
                             : fame::load_wordlist(lx.classes);
      fame::KeywordLexicon lex;
      lex.language = lx.language;
      for (const auto& [cls, base] : words) lex.class_sets[cls] = fame::build_class_set(cls, lx.language, base, rules);
      std::vector<std::string> codes = lx.countries;
      if (codes.empty()) {
        for (const auto& [code, c] : gaz.countries()) codes.push_back(code);
      }
      for (const auto& code : codes) {
        lex.location_sets[code] = fame::build_location_set(code, gaz, lx.language, lx.top_cities);
      }
      if (lx.vote_runs > 0) {
        if (lx.sampler.empty()) throw Error(ErrorCode::kInvalidArgument, "--vote-runs needs --sampler-client");
        auto client = fame::make_client(lx.sampler, lx.model);
        fame::LlmKeywordSampler sampler(*client, lx.language);
        auto expand = [&](fame::KeywordSet& set, const std::string& name, bool loc) {
          const auto runs = fame::collect_runs(sampler, name, loc, lx.vote_runs, g.jobs);
          for (const auto& kw : fame::vote_expand(set, runs, lx.vote_threshold)) set.add(kw, fame::Provenance::kLlmVote);
        };
        for (auto& [cls, set] : lex.class_sets) expand(set, cls, false);
        if (lx.vote_locations) {
          for (auto& [code, set] : lex.location_sets) {
            expand(set, fame::CountryTable::builtin().display_name(code), true);
          }
        }
      }
      if (!lx.extra.empty()) fame::add_extra_keywords(lex, lx.extra);
      outputs.add(lx.out, fame::lexicon_to_json(lex).dump(1) + "\n");
      std::cout << json{{"classes", lex.class_sets.size()},
                        {"locations", lex.location_sets.size()},
                        {"keywords", lex.keyword_count()}}
                       .dump()
                << '\n';
    });
  });

  // match -------------------------------------------------------------------
  auto* match = app.add_subcommand("match", "Phase one: keyword and date-window filter");
  struct {
    EventArgs events;
    CorpusArgs corpus;
    std::vector<std::string> lexicons;
    std::string scope = "title_plus_body", out, stats;
    int window_days = 7, window_before_days = 0;
  } mt;
  mt.events.add(match);
  mt.corpus.add(match);
  match->add_option("--lexicon", mt.lexicons, "Lexicon JSON, one per language (repeatable)")->required();
  match->add_option("--scope", mt.scope, "title_only, title_plus_head, or title_plus_body");
  match->add_option("--window-days", mt.window_days, "Days after the event start")->check(CLI::NonNegativeNumber);
  match->add_option("--window-before-days", mt.window_before_days, "Days before the event start")
      ->check(CLI::NonNegativeNumber);
  match->add_option("--out", mt.out, "LinkSet JSONL")->required();
  match->add_option("--stats", mt.stats, "Matcher statistics JSON");
  match->callback([&] {
    actions.push_back([&] {
      const auto events = mt.events.load();
      const auto corpus = mt.corpus.load(g.jobs).corpus;
      std::vector<fame::PatternAutomaton> automata;
      for (const auto& p : mt.lexicons) automata.push_back(fame::PatternAutomaton::compile(fame::load_lexicon(p)));
      std::vector<const fame::PatternAutomaton*> ptrs;
      for (const auto& a : automata) ptrs.push_back(&a);
      fame::PhaseOneOptions o;
      o.scope = fame::parse_match_scope(mt.scope);
      o.window_days = mt.window_days;
      o.window_before_days = mt.window_before_days;
      o.jobs = g.jobs;
      fame::PhaseOneStats st;
      const auto links = fame::phase_one_batch(events, corpus, ptrs, o, &st);
      std::ostringstream out;
      links.write_jsonl(out, header(g));
      outputs.add(mt.out, out.str());
      json sj = {{"fingerprints", st.fingerprints}, {"articles_scanned", st.articles_scanned},
                 {"bytes_scanned", st.bytes_scanned}, {"pairs", st.pairs}};
      json patterns = json::array();
      for (const auto& a : automata) {
        patterns.push_back({{"language", a.language()}, {"patterns", a.pattern_count()},
                            {"states", a.state_count()}});
      }
      sj["automata"] = patterns;
      if (!mt.stats.empty()) outputs.add(mt.stats, with_header(g, {{"stats", sj}}));
      std::cout << sj.dump() << '\n';
    });
  });

  // filter ------------------------------------------------------------------
  auto* filter = app.add_subcommand("filter", "Phase two: LLM question answering over article heads");
  struct {
    std::string links, client = "http", model, variant = "simple", prompt_aux, indeterminate = "drop", cache, out,
                       verdicts;
    double rate = 0;
    EventArgs events;
    CorpusArgs corpus;
  } ft;
  filter->add_option("--links", ft.links, "Phase-one LinkSet JSONL")->required();
  ft.events.add(filter);
  ft.corpus.add(filter);
  filter->add_option("--client", ft.client, "mock:<script.jsonl> or http[:<endpoint>]");
  filter->add_option("--model", ft.model, "Model id");
  filter->add_option("--variant", ft.variant, "simple, category, category_paren, or definition");
  filter->add_option("--prompt-aux", ft.prompt_aux, "Per-class category/definition JSON");
  filter->add_option("--indeterminate", ft.indeterminate, "keep, drop, or retry")
      ->check(CLI::IsMember({"keep", "drop", "retry"}));
  filter->add_option("--cache", ft.cache, "Append-only response cache JSONL");
  filter->add_option("--rate", ft.rate, "Requests per second (0 = unlimited)");
  filter->add_option("--out", ft.out, "LinkSet JSONL with phase two")->required();
  filter->add_option("--verdicts", ft.verdicts, "Verdict log JSONL");
  filter->callback([&] {
    actions.push_back([&] {
      const auto links = fame::LinkSet::load(ft.links);
      const auto events = ft.events.load();
      const auto corpus = ft.corpus.load(g.jobs).corpus;
      auto client = fame::make_client(ft.client, ft.model);
      std::optional<fame::ResponseCache> cache;
      if (!ft.cache.empty()) cache.emplace(ft.cache);
      fame::PhaseTwoOptions o;
      const auto v = fame::parse_prompt_variant(ft.variant);
      o.prompt = ft.prompt_aux.empty() ? fame::PromptTemplate::builtin(v) : fame::PromptTemplate::load(ft.prompt_aux, v);
      o.indeterminate = fame::parse_indeterminate_policy(ft.indeterminate);
      o.jobs = g.jobs;
      o.rate_per_second = ft.rate;
      o.cache = cache ? &*cache : nullptr;
      const auto res = fame::phase_two(links, events, corpus, *client, o);
      std::ostringstream out;
      res.links.write_jsonl(out, header(g));
      outputs.add(ft.out, out.str());
      if (!ft.verdicts.empty()) {
        std::ostringstream vs;
        fame::write_verdicts_jsonl(res.verdicts, vs, header(g));
        outputs.add(ft.verdicts, vs.str());
      }
      const auto& s = res.stats;
      std::cout << json{{"pairs", s.pairs}, {"unique_prompts", s.unique_prompts}, {"cache_hits", s.cache_hits},
                        {"client_calls", s.client_calls}, {"keep", s.keep}, {"drop", s.drop},
                        {"indeterminate", s.indeterminate}, {"transport_failures", s.transport_failures}}
                       .dump()
                << '\n';
    });
  });

  // baseline ----------------------------------------------------------------
  auto* baseline = app.add_subcommand("baseline", "Keyword baseline (phase one with a baseline lexicon)");
  struct {
    EventArgs events;
    CorpusArgs corpus;
    std::string locations, words, scope = "title_only", out;
    int window_days = 7, window_before_days = 0;
  } bl;
  bl.events.add(baseline);
  bl.corpus.add(baseline);
  baseline->add_option("--locations", bl.locations, "Lexicon JSON whose location sets are reused")->required();
  baseline->add_option("--words", bl.words, "Baseline class wordlist CSV (default: shipped list)");
  baseline->add_option("--scope", bl.scope, "title_only, title_plus_head, or title_plus_body");
  baseline->add_option("--window-days", bl.window_days, "Days after the event start");
  baseline->add_option("--window-before-days", bl.window_before_days, "Days before the event start");
  baseline->add_option("--out", bl.out, "LinkSet JSONL")->required();
  baseline->callback([&] {
    actions.push_back([&] {
      const auto events = bl.events.load();
      const auto corpus = bl.corpus.load(g.jobs).corpus;
      const auto words = bl.words.empty() ? fame::builtin_baseline_wordlist() : fame::load_wordlist(bl.words);
      const auto lex = fame::make_baseline_lexicon(words, fame::load_lexicon(bl.locations));
      fame::PhaseOneOptions o;
      o.window_days = bl.window_days;
      o.window_before_days = bl.window_before_days;
      o.jobs = g.jobs;
      const auto links = fame::keyword_baseline(events, corpus, lex, fame::parse_match_scope(bl.scope), o);
      std::ostringstream out;
      links.write_jsonl(out, header(g));
      outputs.add(bl.out, out.str());
    });
  });

  // evaluate ----------------------------------------------------------------
  auto* evaluate = app.add_subcommand("evaluate", "Score linkers against gold labels");
  struct {
    std::string links, labels, phase = "phase2", method = "fame", out, table, per_event;
    std::vector<std::string> baselines;
    bool strict = false;
  } ev;
  evaluate->add_option("--links", ev.links, "LinkSet JSONL to score");
  evaluate->add_option("--labels", ev.labels, "Gold labels CSV event_id,article_id,label")->required();
  evaluate->add_option("--phase", ev.phase, "phase1 or phase2");
  evaluate->add_option("--method", ev.method, "Name of the scored method");
  evaluate->add_option("--baseline", ev.baselines, "NAME=links.jsonl scored on phase one (repeatable)");
  evaluate->add_flag("--strict", ev.strict, "Fail on predictions without gold labels");
  evaluate->add_option("--out", ev.out, "Report JSON");
  evaluate->add_option("--table", ev.table, "Human-readable table");
  evaluate->add_option("--per-event", ev.per_event, "Per-event CSV for the main method");
  evaluate->callback([&] {
    actions.push_back([&] {
      const auto gold = fame::load_labels(ev.labels);
      std::vector<fame::EvalReport> reports;
      if (!ev.links.empty()) {
        fame::ScoreOptions o;
        o.phase = phase_arg(ev.phase);
        o.strict = ev.strict;
        o.method = ev.method;
        reports.push_back(fame::score(fame::LinkSet::load(ev.links), gold, o));
      }
      for (const auto& b : ev.baselines) {
        const auto eq = b.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::kInvalidArgument, "--baseline expects NAME=path");
        fame::ScoreOptions o;
        o.phase = fame::Phase::kPhase1;
        o.strict = ev.strict;
        o.method = b.substr(0, eq);
        reports.push_back(fame::score(fame::LinkSet::load(b.substr(eq + 1)), gold, o));
      }
      if (reports.empty()) throw Error(ErrorCode::kInvalidArgument, "nothing to score: pass --links or --baseline");
      json all = json::array();
      for (const auto& r : reports) all.push_back(fame::report_to_json(r));
      if (!ev.out.empty()) outputs.add(ev.out, with_header(g, {{"reports", all}}));
      const std::string table = fame::report_table(reports);
      if (!ev.table.empty()) outputs.add(ev.table, table);
      if (!ev.per_event.empty()) {
        std::ostringstream pe;
        fame::write_per_event_csv(reports.front(), pe);
        outputs.add(ev.per_event, pe.str());
      }
      std::cout << table;
    });
  });

  // sample ------------------------------------------------------------------
  auto* sample = app.add_subcommand("sample", "Choose events and articles for annotation");
  struct {
    std::string links, out, csv_out;
    EventArgs events;
    fame::SamplingOptions opt;
  } sp;
  sample->add_option("--links", sp.links, "LinkSet JSONL with both phases")->required();
  sp.events.add(sample);
  sample->add_option("--per-class", sp.opt.per_class, "Events per class");
  sample->add_option("--per-class-attack", sp.opt.per_class_attack, "Events for the attack class");
  sample->add_option("--min-phase1", sp.opt.min_phase1, "Minimum phase-one articles");
  sample->add_option("--min-phase2", sp.opt.min_phase2, "Minimum phase-two articles");
  sample->add_option("--cap", sp.opt.cap, "Articles listed per event");
  sample->add_option("--out", sp.out, "Sampling plan JSON");
  sample->add_option("--csv", sp.csv_out, "event_id,article_id rows for annotators");
  sample->callback([&] {
    actions.push_back([&] {
      sp.opt.seed = g.seed;
      const auto plan = fame::sample_for_annotation(sp.events.load(), fame::LinkSet::load(sp.links), sp.opt);
      json pj = fame::sampling_plan_to_json(plan);
      if (!sp.out.empty()) outputs.add(sp.out, with_header(g, pj));
      if (!sp.csv_out.empty()) {
        std::ostringstream c;
        fame::write_sampling_csv(plan, c);
        outputs.add(sp.csv_out, c.str());
      }
      std::cout << pj.dump() << '\n';
    });
  });

  // agreement ---------------------------------------------------------------
  auto* agree = app.add_subcommand("agreement", "Percent agreement and Cohen's kappa between two annotators");
  struct {
    std::string a, b, out;
  } ag;
  agree->add_option("--labels", ag.a, "Labels CSV (with an annotator column unless --labels-b is given)")->required();
  agree->add_option("--labels-b", ag.b, "Second annotator's labels CSV");
  agree->add_option("--out", ag.out, "Agreement JSON");
  agree->callback([&] {
    actions.push_back([&] {
      const auto r = ag.b.empty() ? fame::agreement(fame::load_labels(ag.a))
                                  : fame::agreement(fame::load_labels(ag.a), fame::load_labels(ag.b));
      const json j = fame::agreement_to_json(r);
      if (!ag.out.empty()) outputs.add(ag.out, with_header(g, j));
      std::cout << j.dump() << '\n';
    });
  });

  // rank --------------------------------------------------------------------
  auto* rank = app.add_subcommand("rank", "Events with the most linked articles");
  struct {
    std::string links, phase = "phase2", out, csv_out;
    EventArgs events;
    std::size_t k = 10;
  } rk;
  rank->add_option("--links", rk.links, "LinkSet JSONL")->required();
  rk.events.add(rank);
  rank->add_option("-k,--top", rk.k, "Rows (0 = all)");
  rank->add_option("--phase", rk.phase, "phase1 or phase2");
  rank->add_option("--out", rk.out, "Ranking JSON");
  rank->add_option("--csv", rk.csv_out, "Ranking CSV");
  rank->callback([&] {
    actions.push_back([&] {
      const auto r = fame::rank_events(fame::LinkSet::load(rk.links), rk.events.load(), rk.k, phase_arg(rk.phase));
      const json j = {{"ranking", fame::ranking_to_json(r)}};
      if (!rk.out.empty()) outputs.add(rk.out, with_header(g, j));
      if (!rk.csv_out.empty()) {
        std::ostringstream c;
        fame::write_ranking_csv(r, c);
        outputs.add(rk.csv_out, c.str());
      }
      std::cout << j.dump() << '\n';
    });
  });

  // coverage ----------------------------------------------------------------
  auto* coverage = app.add_subcommand("coverage", "Reporter × event-country coverage matrix");
  struct {
    std::string links, phase = "phase2", out, csv_out;
    EventArgs events;
    CorpusArgs corpus;
    std::size_t min_event_countries = 10;
    std::vector<std::string> reporters;
  } cv;
  coverage->add_option("--links", cv.links, "LinkSet JSONL")->required();
  cv.events.add(coverage);
  cv.corpus.add(coverage);
  coverage->add_option("--min-event-countries", cv.min_event_countries, "Reporter threshold");
  coverage->add_option("--reporters", cv.reporters, "Explicit reporter list")->delimiter(',');
  coverage->add_option("--phase", cv.phase, "phase1 or phase2");
  coverage->add_option("--out", cv.out, "Coverage JSON");
  coverage->add_option("--csv", cv.csv_out, "Coverage CSV");
  coverage->callback([&] {
    actions.push_back([&] {
      fame::CoverageOptions o;
      o.min_event_countries = cv.min_event_countries;
      if (!cv.reporters.empty()) o.reporters = cv.reporters;
      o.phase = phase_arg(cv.phase);
      const auto m = fame::coverage_matrix(fame::LinkSet::load(cv.links), cv.events.load(),
                                           cv.corpus.load(g.jobs).corpus, o);
      const json j = fame::coverage_to_json(m);
      if (!cv.out.empty()) outputs.add(cv.out, with_header(g, j));
      if (!cv.csv_out.empty()) {
        std::ostringstream c;
        fame::write_coverage_csv(m, c);
        outputs.add(cv.csv_out, c.str());
      }
      std::cout << json{{"reporters", m.reporters}, {"event_countries", m.event_countries.size()}}.dump() << '\n';
    });
  });

  // regress -----------------------------------------------------------------
  auto* regress = app.add_subcommand("regress", "Forward-AIC regression of coverage on country factors");
  struct {
    std::string links, attrs, pair_attrs, language, dv = "raw", out, table, factors_out, phase = "phase2";
    EventArgs events;
    CorpusArgs corpus;
    std::size_t min_event_countries = 10;
    std::vector<std::string> reporters, always_in;
    bool include_self = false;
    fame::FactorOptions fo;
  } rg;
  regress->add_option("--links", rg.links, "LinkSet JSONL")->required();
  rg.events.add(regress);
  rg.corpus.add(regress);
  regress->add_option("--attrs", rg.attrs, "Country attributes CSV")->required();
  regress->add_option("--pair-attrs", rg.pair_attrs, "Country-pair attributes CSV")->required();
  regress->add_option("--language", rg.language, "Only articles in this language");
  regress->add_option("--min-event-countries", rg.min_event_countries, "Reporter threshold");
  regress->add_option("--reporters", rg.reporters, "Explicit reporter list")->delimiter(',');
  regress->add_option("--phase", rg.phase, "phase1 or phase2");
  regress->add_option("--dv-transform", rg.dv, "raw, log1p, or minmax")->check(CLI::IsMember({"raw", "log1p", "minmax"}));
  regress->add_option("--always-in", rg.always_in, "Factors forced into every model")->delimiter(',');
  regress->add_flag("--include-self", rg.include_self, "Keep pairs where reporter = event country");
  regress->add_flag("--impute-attributes", rg.fo.impute_country_attributes, "Fill missing country attributes");
  regress->add_option("--gdp-threshold", rg.fo.gdp_threshold, "High-GDP threshold in USD");
  regress->add_option("--democracy-threshold", rg.fo.democracy_threshold, "High democracy index threshold");
  regress->add_option("--press-freedom-threshold", rg.fo.press_freedom_threshold, "High press freedom threshold");
  regress->add_option("--gini-threshold", rg.fo.gini_threshold, "High Gini threshold");
  regress->add_option("--factors-out", rg.factors_out, "Raw factor matrix CSV");
  regress->add_option("--out", rg.out, "Regression report JSON");
  regress->add_option("--table", rg.table, "Star-annotated text table");
  regress->callback([&] {
    actions.push_back([&] {
      if (!rg.language.empty()) rg.corpus.languages = {rg.language};
      const auto events = rg.events.load();
      const auto corpus = rg.corpus.load(g.jobs).corpus;
      auto links = fame::LinkSet::load(rg.links);
      // Links to articles outside the language filter are dropped.
      fame::LinkSet scoped;
      for (const auto& eid : links.event_ids()) {
        const auto* l = links.find(eid);
        auto& o = scoped.upsert(eid);
        o.collision_group = l->collision_group;
        for (const auto& a : l->phase1) {
          if (corpus.find(a)) o.phase1.push_back(a);
        }
        if (l->phase2) {
          o.phase2.emplace();
          for (const auto& a : *l->phase2) {
            if (corpus.find(a)) o.phase2->push_back(a);
          }
        }
      }
      fame::CoverageOptions co;
      co.min_event_countries = rg.min_event_countries;
      if (!rg.reporters.empty()) co.reporters = rg.reporters;
      co.phase = phase_arg(rg.phase);
      const auto m = fame::coverage_matrix(scoped, events, corpus, co);
      const auto obs = fame::coverage_observations(m, rg.include_self);
      const auto raw = fame::build_factors(obs, fame::load_country_attributes(rg.attrs),
                                           fame::load_pair_attributes(rg.pair_attrs),
                                           fame::average_deaths_by_country(events), rg.fo);
      if (!rg.factors_out.empty()) {
        std::ostringstream c;
        fame::write_factor_csv(raw, c);
        outputs.add(rg.factors_out, c.str());
      }
      const auto f = fame::preprocess(raw);
      const auto y = fame::transform_dv(f.y(), fame::parse_dv_transform(rg.dv));
      const auto res = fame::forward_aic(f.values, y, f.names, rg.always_in, g.jobs);
      std::vector<double> vifs;
      if (res.selected.size() >= 2) {
        Eigen::MatrixXd sel(f.values.rows(), static_cast<Eigen::Index>(res.selected.size()));
        for (std::size_t i = 0; i < res.selected.size(); ++i) {
          sel.col(static_cast<Eigen::Index>(i)) = f.values.col(static_cast<Eigen::Index>(*f.column(res.selected[i])));
        }
        vifs = fame::vif(sel);
      }
      json j = fame::regression_to_json(res, vifs);
      j["reporters"] = m.reporters;
      j["warnings"] = f.warnings;
      if (!rg.out.empty()) outputs.add(rg.out, with_header(g, j));
      const std::string table = fame::regression_table(res, "Dependent variable: average articles per event");
      if (!rg.table.empty()) outputs.add(rg.table, table);
      std::cout << table;
    });
  });

  // funnel ------------------------------------------------------------------
  auto* funnel = app.add_subcommand("funnel", "Articles surviving each phase, per language");
  struct {
    std::string links, out;
    EventArgs events;
    CorpusArgs corpus;
    int window_days = 7, window_before_days = 0;
  } fn;
  funnel->add_option("--links", fn.links, "LinkSet JSONL")->required();
  fn.events.add(funnel);
  fn.corpus.add(funnel);
  funnel->add_option("--window-days", fn.window_days, "Days after the event start");
  funnel->add_option("--window-before-days", fn.window_before_days, "Days before the event start");
  funnel->add_option("--out", fn.out, "Funnel JSON");
  funnel->callback([&] {
    actions.push_back([&] {
      const auto events = fn.events.load();
      const auto corpus = fn.corpus.load(g.jobs).corpus;
      const auto links = fame::LinkSet::load(fn.links);
      const auto violations = fame::check_funnel(links, events, corpus, fn.window_days, fn.window_before_days);
      if (!violations.empty()) {
        throw Error(ErrorCode::kInternal, "funnel invariant violated", {{"violations", violations}});
      }
      const auto f = fame::compute_funnel(links, events, corpus, fn.window_days, fn.window_before_days);
      if (!fn.out.empty()) outputs.add(fn.out, with_header(g, fame::funnel_to_json(f)));
      std::cout << fame::funnel_table(f);
    });
  });

  // run ---------------------------------------------------------------------
  auto* run = app.add_subcommand("run", "Full pipeline: ingest, match, filter, rank, evaluate");
  struct {
    fame::PipelineConfig cfg;
    std::string scope = "title_plus_body", variant = "simple", indeterminate = "drop", out_dir;
  } rn;
  run->add_option("--events", rn.cfg.events, "Events file")->required();
  run->add_option("--events-format", rn.cfg.events_format, "csv or jsonl");
  run->add_option("--mapping", rn.cfg.column_mapping, "Column mapping");
  run->add_flag("--strict", rn.cfg.strict, "Fail on any rejected event row");
  run->add_flag("--gtd-salience", rn.cfg.gtd_salience, "Apply the GTD casualty salience filter");
  run->add_option("--corpus", rn.cfg.corpus, "Corpus shards (repeatable)")->required();
  run->add_option("--blocklist", rn.cfg.blocklist, "Blocked URL hosts");
  run->add_option("--languages", rn.cfg.languages, "Keep only these languages")->delimiter(',');
  run->add_option("--lexicon", rn.cfg.lexicons, "Lexicon JSON per language (repeatable)")->required();
  run->add_option("--scope", rn.scope, "Match scope");
  run->add_option("--window-days", rn.cfg.window_days, "Days after the event start");
  run->add_option("--window-before-days", rn.cfg.window_before_days, "Days before the event start");
  run->add_option("--client", rn.cfg.client, "mock:<script.jsonl> or http[:<endpoint>]");
  run->add_option("--model", rn.cfg.model, "Model id");
  run->add_option("--variant", rn.variant, "Prompt variant");
  run->add_option("--prompt-aux", rn.cfg.prompt_aux, "Per-class category/definition JSON");
  run->add_option("--indeterminate", rn.indeterminate, "keep, drop, or retry");
  run->add_option("--cache", rn.cfg.cache, "Response cache JSONL");
  run->add_option("--rate", rn.cfg.rate_per_second, "Requests per second");
  run->add_option("--labels", rn.cfg.labels, "Gold labels CSV (enables evaluation)");
  run->add_option("--top", rn.cfg.top_k, "Ranking rows");
  run->add_option("--out-dir", rn.out_dir, "Output directory")->required();
  run->callback([&] {
    actions.push_back([&] {
      rn.cfg.scope = fame::parse_match_scope(rn.scope);
      rn.cfg.variant = fame::parse_prompt_variant(rn.variant);
      rn.cfg.indeterminate = fame::parse_indeterminate_policy(rn.indeterminate);
      rn.cfg.jobs = g.jobs;
      rn.cfg.seed = g.seed;
      const auto res = fame::run_pipeline(rn.cfg);
      const auto staged = fame::pipeline_outputs(res, rn.cfg, rn.out_dir);
      for (const auto& [path, content] : staged.files()) outputs.add(path, content);
      std::cout << fame::funnel_table(res.funnel);
    });
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code != 0) {
      std::cerr << nlohmann::json{{"error", {{"code", "usage"}, {"message", e.what()}}}}.dump() << '\n';
    }
    return code;
  }

  try {
    if (g.log_level == "debug") fame::log::set_level(fame::log::Level::kDebug);
    if (g.log_level == "warn") fame::log::set_level(fame::log::Level::kWarn);
    if (g.log_level == "error") fame::log::set_level(fame::log::Level::kError);
    if (g.log_level == "off") fame::log::set_level(fame::log::Level::kOff);
    // Paths and flags determine a run; jobs and logging do not change outputs.
    {
      std::istringstream cfg(app.config_to_str(true, false));
      for (std::string line; std::getline(cfg, line);) {
        if (line.rfind("jobs=", 0) == 0 || line.rfind("log-level=", 0) == 0) continue;
        config_text += line + '\n';
      }
    }
    for (auto& a : actions) a();
    outputs.commit();
  } catch (const Error& e) {
    std::cerr << nlohmann::json{{"error", e.to_json()}}.dump() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", {{"code", "internal"}, {"message", e.what()}}}}.dump() << '\n';
    return 1;
  }
  return 0;
}
