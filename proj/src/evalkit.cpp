#include "fame/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include "fame/csv.hpp"
#include "fame/embedded.hpp"
#include "fame/error.hpp"
#include "fame/log.hpp"
#include "fame/text.hpp"

namespace fame {

std::string_view to_string(Label l) { return l == Label::kPositive ? "positive" : "negative"; }

Label parse_label(std::string_view s) {
  const std::string v = text::ascii_lower(text::trim(s));
  if (v == "positive" || v == "pos" || v == "yes" || v == "1" || v == "true") return Label::kPositive;
  if (v == "negative" || v == "neg" || v == "no" || v == "0" || v == "false") return Label::kNegative;
  throw Error(ErrorCode::kParse, "unrecognized label '" + std::string(s) + "'");
}

namespace {

std::vector<AnnotationLabel> labels_from_table(const csv::Table& t, const std::string& source) {
  const std::size_t ce = t.require_column("event_id", source);
  const std::size_t ca = t.require_column("article_id", source);
  const std::size_t cl = t.require_column("label", source);
  const auto cn = t.column("annotator");
  std::vector<AnnotationLabel> out;
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    auto field = [&](std::size_t c) -> std::string {
      return c < row.size() ? std::string(text::trim(row[c])) : std::string();
    };
    AnnotationLabel l;
    l.event_id = field(ce);
    l.article_id = field(ca);
    try {
      l.label = parse_label(field(cl));
    } catch (const Error& e) {
      throw Error(ErrorCode::kParse, std::string(e.what()) + " at line " + std::to_string(t.lines[r]),
                  {{"file", source}});
    }
    if (cn) l.annotator = field(*cn);
    if (l.event_id.empty() || l.article_id.empty()) {
      throw Error(ErrorCode::kSchema, "empty id at line " + std::to_string(t.lines[r]), {{"file", source}});
    }
    if (!seen.emplace(l.event_id, l.article_id, l.annotator).second) {
      throw Error(ErrorCode::kSchema,
                  "duplicate label for (" + l.event_id + ", " + l.article_id + ", " + l.annotator +
                      ") at line " + std::to_string(t.lines[r]),
                  {{"file", source}});
    }
    out.push_back(std::move(l));
  }
  return out;
}

}  // namespace

std::vector<AnnotationLabel> load_labels(const std::string& path) {
  return labels_from_table(csv::read_file(path), path);
}

std::vector<AnnotationLabel> parse_labels(std::string_view content) {
  return labels_from_table(csv::read_string(content), "<string>");
}

std::map<PairKey, Label> gold_map(const std::vector<AnnotationLabel>& labels) {
  std::map<PairKey, Label> out;
  for (const auto& l : labels) {
    auto [it, inserted] = out.emplace(PairKey{l.event_id, l.article_id}, l.label);
    if (!inserted && it->second != l.label) {
      throw Error(ErrorCode::kSchema, "conflicting gold labels for (" + l.event_id + ", " + l.article_id + ")");
    }
  }
  return out;
}

// --- Sampling --------------------------------------------------------------

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  if (bound == 0) throw Error(ErrorCode::kInvalidArgument, "uniform_below needs a positive bound");
  // Reject the top partial block so every residue is equally likely.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              (std::numeric_limits<std::uint64_t>::max() % bound + 1) % bound;
  for (;;) {
    const std::uint64_t x = rng();
    if (x <= limit) return x % bound;
  }
}

SamplingPlan sample_for_annotation(const EventStore& events, const LinkSet& links,
                                   const SamplingOptions& opt, const Corpus* corpus) {
  std::map<std::string, std::vector<const EventRecord*>> by_class;
  for (const auto& r : events.records()) by_class[r.fingerprint.event_class.name()].push_back(&r);

  auto phase_size = [&](const EventRecord& r, Phase p) -> std::size_t {
    const EventLinks* l = links.find(r.id);
    if (!l) return 0;
    if (p == Phase::kPhase2 && !l->phase2) return 0;
    return l->ids(p).size();
  };

  std::mt19937_64 rng(opt.seed);
  SamplingPlan plan;
  for (const auto& [cls, recs] : by_class) {
    ClassSample cs;
    cs.event_class = cls;
    cs.events = recs.size();
    std::vector<const EventRecord*> eligible;
    for (const auto* r : recs) {
      if (phase_size(*r, Phase::kPhase1) >= opt.min_phase1 && phase_size(*r, Phase::kPhase2) >= opt.min_phase2) {
        eligible.push_back(r);
      }
    }
    cs.eligible = eligible.size();
    const std::size_t k = cls == "attack" ? opt.per_class_attack : opt.per_class;
    std::vector<const EventRecord*> chosen;
    if (eligible.size() > k) {
      // Partial Fisher–Yates over the eligible list, then back to store order.
      std::vector<std::size_t> idx(eligible.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + uniform_below(rng, idx.size() - i);
        std::swap(idx[i], idx[j]);
      }
      idx.resize(k);
      std::sort(idx.begin(), idx.end());
      for (auto i : idx) chosen.push_back(eligible[i]);
      cs.sampled = true;
    } else {
      chosen = recs;
      cs.note = "at most " + std::to_string(k) + " eligible events; all events of the class taken";
    }
    if (recs.empty() || (eligible.empty() && chosen.empty())) cs.note = "no eligible events";
    for (const auto* r : chosen) {
      SampledEvent se{r->id, {}};
      if (const EventLinks* l = links.find(r->id)) {
        std::vector<std::string> ids = l->phase1;
        if (corpus) {
          std::sort(ids.begin(), ids.end(), [&](const std::string& a, const std::string& b) {
            const auto ia = corpus->index_of(a), ib = corpus->index_of(b);
            if (ia && ib) return *ia < *ib;
            if (ia.has_value() != ib.has_value()) return ia.has_value();
            return a < b;
          });
        }
        if (ids.size() > opt.cap) ids.resize(opt.cap);
        se.article_ids = std::move(ids);
      }
      cs.selected.push_back(std::move(se));
    }
    plan.classes.push_back(std::move(cs));
  }
  return plan;
}

nlohmann::ordered_json sampling_plan_to_json(const SamplingPlan& plan) {
  nlohmann::ordered_json classes = nlohmann::ordered_json::array();
  for (const auto& c : plan.classes) {
    nlohmann::ordered_json sel = nlohmann::ordered_json::array();
    for (const auto& e : c.selected) sel.push_back({{"event_id", e.event_id}, {"article_ids", e.article_ids}});
    nlohmann::ordered_json j = {{"class", c.event_class},
                                {"events", c.events},
                                {"eligible", c.eligible},
                                {"sampled", c.sampled},
                                {"selected", sel}};
    if (!c.note.empty()) j["note"] = c.note;
    classes.push_back(std::move(j));
  }
  return nlohmann::ordered_json{{"classes", classes}};
}

void write_sampling_csv(const SamplingPlan& plan, std::ostream& out) {
  out << "event_id,article_id\n";
  for (const auto& c : plan.classes) {
    for (const auto& e : c.selected) {
      for (const auto& a : e.article_ids) out << csv::join_row({e.event_id, a}) << '\n';
    }
  }
}

// --- Agreement -------------------------------------------------------------

AgreementResult agreement(const std::vector<AnnotationLabel>& a, const std::vector<AnnotationLabel>& b) {
  const auto ma = gold_map(a);
  const auto mb = gold_map(b);
  AgreementResult r;
  for (const auto& [k, la] : ma) {
    auto it = mb.find(k);
    if (it == mb.end()) {
      ++r.only_a;
      continue;
    }
    const Label lb = it->second;
    ++r.items;
    if (la == Label::kPositive && lb == Label::kPositive) ++r.both_positive;
    if (la == Label::kPositive && lb == Label::kNegative) ++r.a_pos_b_neg;
    if (la == Label::kNegative && lb == Label::kPositive) ++r.a_neg_b_pos;
    if (la == Label::kNegative && lb == Label::kNegative) ++r.both_negative;
  }
  r.only_b = mb.size() - r.items;
  if (r.items == 0) throw Error(ErrorCode::kInvalidArgument, "annotators share no labeled pairs");
  const double n = static_cast<double>(r.items);
  r.observed = static_cast<double>(r.both_positive + r.both_negative) / n;
  const double a_pos = static_cast<double>(r.both_positive + r.a_pos_b_neg) / n;
  const double b_pos = static_cast<double>(r.both_positive + r.a_neg_b_pos) / n;
  r.expected = a_pos * b_pos + (1 - a_pos) * (1 - b_pos);
  if (r.expected >= 1.0) {
    r.kappa = r.observed >= 1.0 ? 1.0 : std::numeric_limits<double>::quiet_NaN();
  } else {
    r.kappa = (r.observed - r.expected) / (1 - r.expected);
  }
  return r;
}

AgreementResult agreement(const std::vector<AnnotationLabel>& labels) {
  std::map<std::string, std::vector<AnnotationLabel>> by;
  for (const auto& l : labels) by[l.annotator].push_back(l);
  if (by.size() != 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "agreement needs exactly two annotators, found " + std::to_string(by.size()));
  }
  return agreement(by.begin()->second, std::next(by.begin())->second);
}

nlohmann::ordered_json agreement_to_json(const AgreementResult& r) {
  nlohmann::ordered_json j = {
      {"items", r.items},
      {"only_a", r.only_a},
      {"only_b", r.only_b},
      {"confusion", {{"both_positive", r.both_positive},
                     {"a_positive_b_negative", r.a_pos_b_neg},
                     {"a_negative_b_positive", r.a_neg_b_pos},
                     {"both_negative", r.both_negative}}},
      {"percent_agreement", 100 * r.observed},
      {"expected_agreement", r.expected},
  };
  if (std::isnan(r.kappa)) {
    j["kappa"] = nullptr;
  } else {
    j["kappa"] = r.kappa;
  }
  return j;
}

// --- Scoring ---------------------------------------------------------------

namespace {

Summary spread(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  Summary s;
  s.min = v.front();
  s.max = v.back();
  const std::size_t n = v.size();
  s.median = n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
  return s;
}

}  // namespace

EvalReport score(const std::map<std::string, std::vector<std::string>>& predictions,
                 const std::vector<AnnotationLabel>& gold, const ScoreOptions& opt) {
  const auto gm = gold_map(gold);
  std::vector<std::string> order;
  std::map<std::string, std::map<std::string, Label>> by_event;
  for (const auto& l : gold) {
    auto [it, inserted] = by_event.try_emplace(l.event_id);
    if (inserted) order.push_back(l.event_id);
    it->second[l.article_id] = gm.at({l.event_id, l.article_id});
  }

  EvalReport rep;
  rep.method = opt.method;
  for (const auto& [eid, ids] : predictions) {
    if (!by_event.count(eid) && !ids.empty()) ++rep.unscored_prediction_events;
  }
  std::vector<double> ps, rs, fs;
  for (const auto& eid : order) {
    const auto& labels = by_event.at(eid);
    EventScore s;
    s.event_id = eid;
    std::set<std::string> predicted;
    if (auto it = predictions.find(eid); it != predictions.end()) {
      for (const auto& aid : it->second) {
        if (!labels.count(aid)) {
          ++s.unannotated_predictions;
          continue;
        }
        predicted.insert(aid);
      }
    }
    if (s.unannotated_predictions && opt.strict) {
      throw Error(ErrorCode::kMissingKey,
                  "event '" + eid + "' has " + std::to_string(s.unannotated_predictions) +
                      " predicted articles without gold labels");
    }
    for (const auto& [aid, lab] : labels) {
      const bool pred = predicted.count(aid) > 0;
      if (lab == Label::kPositive) {
        ++(pred ? s.tp : s.fn);
      } else {
        ++(pred ? s.fp : s.tn);
      }
    }
    if (s.tp + s.fp > 0) s.precision = static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp);
    if (s.tp + s.fn > 0) s.recall = static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fn);
    if (s.precision && s.recall) {
      const double d = *s.precision + *s.recall;
      s.f1 = d > 0 ? 2 * *s.precision * *s.recall / d : 0.0;
    }
    s.eligible = s.precision && s.recall;
    if (!s.recall) {
      s.note = "no gold-positive articles";
    } else if (!s.precision) {
      s.note = "no predicted articles among the annotated ones";
    }
    if (s.eligible) {
      ps.push_back(*s.precision);
      rs.push_back(*s.recall);
      fs.push_back(*s.f1);
    } else {
      rep.excluded_events.push_back(eid);
    }
    rep.unannotated_predictions += s.unannotated_predictions;
    rep.events.push_back(std::move(s));
  }
  if (rep.unannotated_predictions && !opt.strict) {
    log::warn("score.unannotated_predictions", {{"method", opt.method}, {"count", rep.unannotated_predictions}});
  }
  rep.eligible_events = fs.size();
  if (!fs.empty()) {
    auto mean = [](const std::vector<double>& v) {
      double sum = 0;
      for (double x : v) sum += x;
      return sum / static_cast<double>(v.size());
    };
    rep.macro_precision = mean(ps);
    rep.macro_recall = mean(rs);
    rep.macro_f1 = mean(fs);
    const double d = rep.macro_precision + rep.macro_recall;
    rep.f1_of_means = d > 0 ? 2 * rep.macro_precision * rep.macro_recall / d : 0.0;
    rep.precision_spread = spread(ps);
    rep.recall_spread = spread(rs);
    rep.f1_spread = spread(fs);
  }
  return rep;
}

EvalReport score(const LinkSet& predictions, const std::vector<AnnotationLabel>& gold,
                 const ScoreOptions& opt) {
  std::map<std::string, std::vector<std::string>> pred;
  for (const auto& eid : predictions.event_ids()) {
    const EventLinks* l = predictions.find(eid);
    if (opt.phase == Phase::kPhase2 && !l->phase2) {
      throw Error(ErrorCode::kInvalidArgument, "event '" + eid + "' has no phase-2 result to score");
    }
    pred[eid] = l->ids(opt.phase);
  }
  return score(pred, gold, opt);
}

namespace {

nlohmann::ordered_json pct(const std::optional<double>& v) {
  if (!v) return nullptr;
  return 100 * *v;
}

nlohmann::ordered_json spread_json(const std::optional<Summary>& s) {
  if (!s) return nullptr;
  return {{"min", 100 * s->min}, {"median", 100 * s->median}, {"max", 100 * s->max}};
}

std::string fmt(double v, int prec = 1) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(prec) << v;
  return ss.str();
}

}  // namespace

nlohmann::ordered_json report_to_json(const EvalReport& r) {
  nlohmann::ordered_json events = nlohmann::ordered_json::array();
  for (const auto& e : r.events) {
    nlohmann::ordered_json j = {{"event_id", e.event_id},
                                {"tp", e.tp},
                                {"fp", e.fp},
                                {"fn", e.fn},
                                {"tn", e.tn},
                                {"precision", pct(e.precision)},
                                {"recall", pct(e.recall)},
                                {"f1", pct(e.f1)},
                                {"eligible", e.eligible}};
    if (e.unannotated_predictions) j["unannotated_predictions"] = e.unannotated_predictions;
    if (!e.note.empty()) j["note"] = e.note;
    events.push_back(std::move(j));
  }
  const bool any = r.eligible_events > 0;
  auto macro = [&](double v) { return any ? nlohmann::ordered_json(100 * v) : nlohmann::ordered_json(nullptr); };
  return nlohmann::ordered_json{
      {"method", r.method},
      {"eligibility", "events with at least one gold-positive article and a defined precision"},
      {"eligible_events", r.eligible_events},
      {"excluded_events", r.excluded_events},
      {"macro", {{"precision", macro(r.macro_precision)},
                 {"recall", macro(r.macro_recall)},
                 {"f1", macro(r.macro_f1)},
                 {"f1_of_means", macro(r.f1_of_means)}}},
      {"spread", {{"precision", spread_json(r.precision_spread)},
                  {"recall", spread_json(r.recall_spread)},
                  {"f1", spread_json(r.f1_spread)}}},
      {"unannotated_predictions", r.unannotated_predictions},
      {"unscored_prediction_events", r.unscored_prediction_events},
      {"events", events},
  };
}

std::string report_table(const std::vector<EvalReport>& reports) {
  std::ostringstream out;
  out << std::left << std::setw(24) << "Method" << std::right << std::setw(8) << "Prec." << std::setw(8)
      << "Recall" << std::setw(8) << "F1" << std::setw(8) << "Events" << std::setw(12) << "Min P"
      << '\n';
  for (const auto& r : reports) {
    out << std::left << std::setw(24) << r.method << std::right;
    if (r.eligible_events) {
      out << std::setw(8) << fmt(100 * r.macro_precision) << std::setw(8) << fmt(100 * r.macro_recall)
          << std::setw(8) << fmt(100 * r.macro_f1) << std::setw(8) << r.eligible_events << std::setw(12)
          << fmt(100 * r.precision_spread->min);
    } else {
      out << std::setw(8) << "N/A" << std::setw(8) << "N/A" << std::setw(8) << "N/A" << std::setw(8) << 0
          << std::setw(12) << "N/A";
    }
    out << '\n';
  }
  return out.str();
}

void write_per_event_csv(const EvalReport& r, std::ostream& out) {
  auto cell = [](const std::optional<double>& v) { return v ? fmt(100 * *v, 4) : std::string("N/A"); };
  out << "event_id,tp,fp,fn,tn,precision,recall,f1,eligible\n";
  for (const auto& e : r.events) {
    out << csv::join_row({e.event_id, std::to_string(e.tp), std::to_string(e.fp), std::to_string(e.fn),
                          std::to_string(e.tn), cell(e.precision), cell(e.recall), cell(e.f1),
                          e.eligible ? "1" : "0"})
        << '\n';
  }
}

// --- Keyword baseline ------------------------------------------------------

std::map<std::string, std::vector<std::string>> builtin_baseline_wordlist() {
  return parse_wordlist(embedded_data("baseline/en_classes.csv"));
}

KeywordLexicon make_baseline_lexicon(const std::map<std::string, std::vector<std::string>>& class_words,
                                     const KeywordLexicon& locations) {
  KeywordLexicon lex;
  lex.language = locations.language;
  lex.location_sets = locations.location_sets;
  for (const auto& [cls, words] : class_words) {
    KeywordSet& set = lex.class_set(cls);
    for (const auto& w : words) set.add(w, Provenance::kManual);
  }
  return lex;
}

LinkSet keyword_baseline(const EventStore& events, const Corpus& corpus,
                         const KeywordLexicon& baseline_lexicon, MatchScope scope, PhaseOneOptions options) {
  options.scope = scope;
  const PatternAutomaton automaton = PatternAutomaton::compile(baseline_lexicon);
  return phase_one_batch(events, corpus, automaton, options);
}

}  // namespace fame
