#include <doctest.h>

#include <filesystem>

#include "fame/error.hpp"
#include "fame/hash.hpp"
#include "fame/pipeline.hpp"
#include "helpers.hpp"

using namespace fame;
using fame::testing::TempDir;
using fame::testing::slurp;

namespace {

const Date kDay = Date::from_ymd(2021, 7, 1);

Article article(std::string id, std::string lang, int day) {
  Article a;
  a.id = std::move(id);
  a.language = std::move(lang);
  a.publish_date = kDay + day;
  a.title = "t";
  return a;
}

EventRecord event(std::string id, std::string country, int day = 0) {
  EventRecord r;
  r.id = std::move(id);
  r.fingerprint = {EventClass("flood"), std::move(country), kDay + day};
  return r;
}

const std::string kGolden = std::string(FAME_TEST_DATA) + "/golden";

PipelineConfig golden_config() {
  PipelineConfig c;
  c.events = kGolden + "/events.csv";
  c.corpus = {kGolden + "/corpus"};
  c.lexicons = {kGolden + "/lexicon_en.json"};
  c.client = "mock:" + kGolden + "/mock.jsonl";
  c.model = "mock";
  c.labels = kGolden + "/labels.csv";
  return c;
}

}  // namespace

TEST_CASE("headers depend only on the config text and the seed") {
  const auto h = make_header("a = 1", 7);
  CHECK(h["config_sha256"] == sha256_hex("a = 1"));
  CHECK(h["seed"] == 7);
  CHECK(h["version"] == std::string(version()));
  CHECK(h == make_header("a = 1", 7));
  CHECK(h != make_header("a = 2", 7));
  CHECK(h != make_header("a = 1", 8));
  CHECK(h.size() == 3);
}

TEST_CASE("atomic writes and staged output sets") {
  TempDir dir;
  const auto p = dir.file("sub/dir/out.txt");
  write_file_atomic(p, "first");
  CHECK(slurp(p) == "first");
  write_file_atomic(p, "second");
  CHECK(slurp(p) == "second");
  CHECK_FALSE(std::filesystem::exists(p + ".tmp"));

  OutputSet out;
  out.add(dir.file("a.json"), "{}\n");
  out.add(dir.file("b/c.json"), "[]\n");
  CHECK_FALSE(std::filesystem::exists(dir.file("a.json")));
  CHECK(out.files().size() == 2);
  out.commit();
  CHECK(slurp(dir.file("a.json")) == "{}\n");
  CHECK(slurp(dir.file("b/c.json")) == "[]\n");
}

TEST_CASE("funnel counts per language") {
  // en: e1 links 3, e2 links 1, e3 none; fr: e1 links 2 (one shared id set).
  const auto corpus = Corpus::build({article("en1", "en", 0), article("en2", "en", 1), article("en3", "en", 2),
                                     article("en9", "en", 40), article("fr1", "fr", 0), article("fr2", "fr", 3)});
  EventStore events;
  events.add(event("e1", "FRA"));
  events.add(event("e2", "KEN", 1));
  events.add(event("e3", "IND", 2));
  LinkSet links;
  links.upsert("e1").phase1 = {"en1", "fr1", "en2", "fr2", "en3"};
  links.upsert("e2").phase1 = {"en2"};
  links.upsert("e3").phase1 = {};
  links.find_mutable("e1")->phase2 = std::vector<std::string>{"en1", "fr1"};
  links.find_mutable("e2")->phase2 = std::vector<std::string>{};
  links.find_mutable("e3")->phase2 = std::vector<std::string>{};
  const auto f = compute_funnel(links, events, corpus);
  REQUIRE(f.languages.size() == 2);
  const auto& en = f.languages[0];
  CHECK(en.language == "en");
  CHECK(en.corpus_articles == 4);
  CHECK(en.window_articles == 3);
  CHECK(en.phase1.articles == 3);
  CHECK(en.phase1.pairs == 4);
  CHECK(en.phase1.events == 2);
  CHECK(en.phase1.median_per_event == 2.0);
  CHECK(en.phase1.max_per_event == 3);
  REQUIRE(en.phase2);
  CHECK(en.phase2->articles == 1);
  CHECK(en.phase2->events == 1);
  CHECK(en.phase2->median_per_event == 1.0);
  const auto& fr = f.languages[1];
  CHECK(fr.corpus_articles == 2);
  CHECK(fr.phase1.articles == 2);
  CHECK(fr.phase1.median_per_event == 2.0);
  CHECK(fr.phase2->articles == 1);
  // Each stage is no larger than the previous one.
  for (const auto& l : f.languages) {
    CHECK(l.phase2->articles <= l.phase1.articles);
    CHECK(l.phase1.articles <= l.window_articles);
    CHECK(l.window_articles <= l.corpus_articles);
  }
  CHECK(check_funnel(links, events, corpus, 7).empty());
  const auto j = funnel_to_json(f);
  CHECK(j["languages"][0]["phase1"]["pairs"] == 4);
  CHECK(funnel_table(f).find("fr") != std::string::npos);

  LinkSet p1_only;
  p1_only.upsert("e2").phase1 = {"en2"};
  CHECK_FALSE(compute_funnel(p1_only, events, corpus).languages[0].phase2.has_value());
}

TEST_CASE("funnel check names every violation") {
  const auto corpus = Corpus::build({article("a", "en", 0), article("late", "en", 30)});
  EventStore events;
  events.add(event("e", "KEN"));
  LinkSet links;
  links.upsert("e").phase1 = {"a", "late", "ghost", "a"};
  links.find_mutable("e")->phase2 = std::vector<std::string>{"a", "extra"};
  links.upsert("nobody").phase1 = {};
  const auto v = check_funnel(links, events, corpus, 7);
  const std::vector<std::string> want = {
      "e: phase-1 article late is outside the event window",
      "e: phase-1 article ghost is not in the corpus",
      "e: duplicate phase-1 articles",
      "e: phase-2 article extra is not in phase 1",
      "nobody: not in the event store",
  };
  CHECK(v == want);
}

TEST_CASE("the pipeline is deterministic across job counts") {
  auto cfg = golden_config();
  const auto a = run_pipeline(cfg);
  cfg.jobs = 4;
  const auto b = run_pipeline(cfg);
  CHECK(a.links == b.links);
  CHECK(a.verdicts == b.verdicts);
  CHECK(check_funnel(a.links, a.events, a.corpus, cfg.window_days).empty());
  REQUIRE(a.evaluation);
  CHECK(a.evaluation->eligible_events > 0);
  CHECK(a.ranking.size() <= cfg.top_k);
  // Jobs are not part of the hashed config, so the outputs match too.
  const auto oa = pipeline_outputs(a, golden_config(), "out");
  const auto ob = pipeline_outputs(b, cfg, "out");
  CHECK(oa.files() == ob.files());
  std::vector<std::string> names;
  for (const auto& [path, content] : oa.files()) names.push_back(path);
  CHECK(names == std::vector<std::string>{"out/links.jsonl", "out/verdicts.jsonl", "out/funnel.json",
                                          "out/ranking.json", "out/eval.json"});
}

TEST_CASE("a scripted client can be passed in") {
  auto cfg = golden_config();
  cfg.labels.clear();
  auto none = ScriptedMockClient::parse("{\"default\":\"No\"}\n");
  const auto r = run_pipeline(cfg, none.get());
  for (const auto& eid : r.links.event_ids()) CHECK(r.links.find(eid)->phase2->empty());
  CHECK_FALSE(r.evaluation);
  CHECK(pipeline_outputs(r, cfg, "o").files().size() == 4);
}

TEST_CASE("pipeline configuration errors") {
  PipelineConfig empty;
  CHECK_THROWS_AS(run_pipeline(empty), Error);
  auto cfg = golden_config();
  cfg.events = kGolden + "/missing.csv";
  CHECK_THROWS_AS(run_pipeline(cfg), Error);
  cfg = golden_config();
  cfg.client = "smoke-signals";
  CHECK_THROWS_AS(run_pipeline(cfg), Error);
  CHECK(golden_config().canonical() == golden_config().canonical());
  auto other = golden_config();
  other.window_days = 3;
  CHECK(other.canonical() != golden_config().canonical());
}
