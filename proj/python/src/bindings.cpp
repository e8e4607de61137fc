// Python bindings. Structured results cross the boundary as JSON text and
// numeric arrays as NumPy arrays; the fame package wraps both.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "fame/attention.hpp"
#include "fame/corpus.hpp"
#include "fame/error.hpp"
#include "fame/evalkit.hpp"
#include "fame/event_store.hpp"
#include "fame/lexicon.hpp"
#include "fame/llm_filter.hpp"
#include "fame/log.hpp"
#include "fame/matcher.hpp"
#include "fame/pipeline.hpp"

namespace py = pybind11;

namespace {

std::string dump(const nlohmann::ordered_json& j) { return j.dump(); }

fame::PipelineConfig config_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  fame::PipelineConfig c;
  c.events = j.at("events").get<std::string>();
  c.events_format = j.value("events_format", c.events_format);
  c.column_mapping = j.value("column_mapping", c.column_mapping);
  c.strict = j.value("strict", c.strict);
  c.gtd_salience = j.value("gtd_salience", c.gtd_salience);
  c.corpus = j.at("corpus").get<std::vector<std::string>>();
  c.blocklist = j.value("blocklist", c.blocklist);
  c.languages = j.value("languages", c.languages);
  c.lexicons = j.at("lexicons").get<std::vector<std::string>>();
  c.scope = fame::parse_match_scope(j.value("scope", std::string(fame::to_string(c.scope))));
  c.window_days = j.value("window_days", c.window_days);
  c.window_before_days = j.value("window_before_days", c.window_before_days);
  c.client = j.value("client", c.client);
  c.model = j.value("model", c.model);
  c.variant = fame::parse_prompt_variant(j.value("variant", std::string("simple")));
  c.prompt_aux = j.value("prompt_aux", c.prompt_aux);
  c.indeterminate = fame::parse_indeterminate_policy(j.value("indeterminate", std::string("drop")));
  c.cache = j.value("cache", c.cache);
  c.rate_per_second = j.value("rate_per_second", c.rate_per_second);
  c.labels = j.value("labels", c.labels);
  c.top_k = j.value("top_k", c.top_k);
  c.jobs = j.value("jobs", c.jobs);
  c.seed = j.value("seed", c.seed);
  return c;
}

std::string links_json(const fame::LinkSet& links) {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  for (const auto& eid : links.event_ids()) {
    const auto* l = links.find(eid);
    nlohmann::ordered_json e = {{"phase1", l->phase1}};
    e["phase2"] = l->phase2 ? nlohmann::ordered_json(*l->phase2) : nlohmann::ordered_json(nullptr);
    out[eid] = std::move(e);
  }
  return out.dump();
}

std::string run(const std::string& config_json) {
  const auto cfg = config_from_json(config_json);
  fame::PipelineResult r;
  {
    py::gil_scoped_release release;
    r = fame::run_pipeline(cfg);
  }
  nlohmann::ordered_json j = {{"links", nlohmann::ordered_json::parse(links_json(r.links))},
                              {"funnel", fame::funnel_to_json(r.funnel)},
                              {"ranking", fame::ranking_to_json(r.ranking)}};
  nlohmann::ordered_json verdicts = nlohmann::ordered_json::array();
  for (const auto& v : r.verdicts) verdicts.push_back(fame::verdict_to_json(v));
  j["verdicts"] = std::move(verdicts);
  j["evaluation"] = r.evaluation ? fame::report_to_json(*r.evaluation) : nlohmann::ordered_json(nullptr);
  return j.dump();
}

std::string phase_one(const std::string& events, const std::string& corpus, const std::vector<std::string>& lexicons,
                      const std::string& scope, int window_days, int window_before_days, int jobs) {
  py::gil_scoped_release release;
  const auto store = fame::load_events(events, fame::EventFileFormat::kCsv).store;
  fame::CorpusLoadOptions co;
  co.jobs = jobs;
  const auto c = fame::load_corpus(corpus, co).corpus;
  std::vector<fame::PatternAutomaton> automata;
  for (const auto& p : lexicons) automata.push_back(fame::PatternAutomaton::compile(fame::load_lexicon(p)));
  std::vector<const fame::PatternAutomaton*> ptrs;
  for (const auto& a : automata) ptrs.push_back(&a);
  fame::PhaseOneOptions o;
  o.scope = fame::parse_match_scope(scope);
  o.window_days = window_days;
  o.window_before_days = window_before_days;
  o.jobs = jobs;
  return links_json(fame::phase_one_batch(store, c, ptrs, o));
}

std::string score(const std::map<std::string, std::vector<std::string>>& predictions, const std::string& labels,
                  bool strict, const std::string& method) {
  fame::ScoreOptions o;
  o.strict = strict;
  o.method = method;
  return dump(fame::report_to_json(fame::score(predictions, fame::load_labels(labels), o)));
}

std::string agreement(const std::string& labels) {
  return dump(fame::agreement_to_json(fame::agreement(fame::load_labels(labels))));
}

py::dict ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<std::string>& names) {
  const auto r = fame::ols_fit(X, y, names);
  py::dict d;
  d["names"] = r.names;
  d["beta"] = r.beta;
  d["se"] = r.se;
  d["t"] = r.t;
  d["p"] = r.p;
  d["n"] = r.n;
  d["k"] = r.k;
  d["rss"] = r.rss;
  d["r2"] = r.r2;
  d["adj_r2"] = r.adj_r2;
  d["aic"] = r.aic;
  d["residuals"] = r.residuals;
  return d;
}

std::string forward_aic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<std::string>& names,
                        const std::vector<std::string>& always_in) {
  const auto r = fame::forward_aic(X, y, names, always_in);
  return dump(fame::regression_to_json(r));
}

}  // namespace

PYBIND11_MODULE(_fame, m) {
  m.doc() = "Event-to-article linking, evaluation, and attention regression";

  static py::exception<fame::Error> exc(m, "FameError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const fame::Error& e) {
      const auto j = e.to_json();
      py::object err = py::reinterpret_borrow<py::object>(exc)(py::str(e.what()));
      err.attr("code") = j.at("error").get<std::string>();
      err.attr("details") = j.contains("details") ? j["details"].dump() : std::string("{}");
      PyErr_SetObject(exc.ptr(), err.ptr());
    }
  });

  m.def("version", [] { return std::string(fame::version()); });
  m.def("set_log_level", [](const std::string& level) {
    using L = fame::log::Level;
    const std::map<std::string, L> levels = {
        {"debug", L::kDebug}, {"info", L::kInfo}, {"warn", L::kWarn}, {"error", L::kError}, {"off", L::kOff}};
    auto it = levels.find(level);
    if (it == levels.end()) throw fame::Error(fame::ErrorCode::kInvalidArgument, "unknown log level " + level);
    fame::log::set_level(it->second);
  });
  m.def("run_pipeline", &run, py::arg("config_json"));
  m.def("phase_one", &phase_one, py::arg("events"), py::arg("corpus"), py::arg("lexicons"),
        py::arg("scope") = "title_plus_body", py::arg("window_days") = 7, py::arg("window_before_days") = 0,
        py::arg("jobs") = 1);
  m.def("score", &score, py::arg("predictions"), py::arg("labels"), py::arg("strict") = false,
        py::arg("method") = "fame");
  m.def("agreement", &agreement, py::arg("labels"));
  m.def("parse_answer", [](const std::string& a) { return std::string(fame::to_string(fame::parse_answer(a))); });
  m.def("question",
        [](const std::string& event_class, const std::string& location, const std::string& variant) {
          return fame::PromptTemplate::builtin(fame::parse_prompt_variant(variant)).question(event_class, location);
        },
        py::arg("event_class"), py::arg("location"), py::arg("variant") = "simple");
  m.def("shannon_entropy", &fame::shannon_entropy);
  m.def("ols", &ols, py::arg("X"), py::arg("y"), py::arg("names"));
  m.def("forward_aic", &forward_aic, py::arg("X"), py::arg("y"), py::arg("names"),
        py::arg("always_in") = std::vector<std::string>{});
  m.def("vif", [](const Eigen::MatrixXd& X) { return fame::vif(X); });
}
