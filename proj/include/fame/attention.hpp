#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "fame/corpus.hpp"
#include "fame/event_store.hpp"
#include "fame/link_set.hpp"

namespace fame {

// --- Rankings --------------------------------------------------------------

struct RankedEvent {
  std::vector<std::string> event_ids;  // >1 for a fingerprint collision group
  EventFingerprint fingerprint;
  std::size_t articles = 0;
  std::optional<std::int64_t> deaths;  // summed over known member counts
};

// Top `k` (0 → all) by linked-article count, ties by earlier date then id.
// Records sharing a fingerprint form one row. Throws kInvalidArgument when
// `phase` is kPhase2 and an event has no phase-2 result.
std::vector<RankedEvent> rank_events(const LinkSet& links, const EventStore& events, std::size_t k,
                                     Phase phase = Phase::kPhase2);
nlohmann::ordered_json ranking_to_json(const std::vector<RankedEvent>& ranking);
void write_ranking_csv(const std::vector<RankedEvent>& ranking, std::ostream& out);

// --- Coverage matrix -------------------------------------------------------

struct CoverageCell {
  std::size_t articles = 0;  // numerator
  std::size_t events = 0;    // denominator
  double value() const { return events ? static_cast<double>(articles) / static_cast<double>(events) : 0.0; }
};

struct CoverageOptions {
  std::size_t min_event_countries = 10;
  std::optional<std::vector<std::string>> reporters;  // explicit list overrides the threshold
  Phase phase = Phase::kPhase2;
};

struct CoverageMatrix {
  std::vector<std::string> reporters;       // sorted
  std::vector<std::string> event_countries; // sorted; every cell has events ≥ 1
  std::map<std::pair<std::string, std::string>, CoverageCell> cells;  // (reporter, event country)
  std::size_t unique_events = 0;
  std::size_t collided_events_skipped = 0;
  std::size_t unknown_reporter_articles = 0;
  std::map<std::string, std::size_t> reporter_country_counts;  // all known reporters
  std::vector<std::string> excluded_reporters;

  const CoverageCell& cell(const std::string& reporter, const std::string& event_country) const;
};

// Only events with a unique fingerprint count. An article's reporter is its
// outlet_country; articles without one go under "unknown" and are excluded.
CoverageMatrix coverage_matrix(const LinkSet& links, const EventStore& events, const Corpus& corpus,
                               const CoverageOptions& options = {});
nlohmann::ordered_json coverage_to_json(const CoverageMatrix& m);
// reporter,event_country,articles,events,average
void write_coverage_csv(const CoverageMatrix& m, std::ostream& out);

// Average deaths per unique-fingerprint event in each country. Missing
// counts are first imputed with the mean over events that have one.
std::map<std::string, double> average_deaths_by_country(const EventStore& events);

// --- Attribute tables ------------------------------------------------------

enum class Continent { kAsia, kEurope, kAfrica, kOceania, kNorthAmerica, kSouthAmerica, kOther };
Continent parse_continent(std::string_view s);
enum class Government { kFederal, kRepublic, kOther };
Government parse_government(std::string_view s);

inline constexpr std::size_t kReligionCount = 7;
// christian, jewish, muslim, unaffiliated, hindu, buddhist, folk
const std::vector<std::string>& religion_names();

struct CountryAttributes {
  std::optional<double> gdp;  // USD
  std::optional<double> population;
  std::optional<double> population_density;
  std::optional<double> area;
  std::optional<double> gini;
  std::optional<double> democracy_index;
  std::optional<double> press_freedom_index;
  std::optional<Continent> continent;
  std::optional<Government> government;
  std::optional<std::vector<double>> religion_shares;  // kReligionCount entries
  std::optional<double> literacy_rate;
  std::optional<double> internet_user_rate;
};

struct PairAttributes {
  std::optional<double> trade;
  std::optional<double> investment;
  std::optional<double> immigration;  // from reporter to event country
  std::optional<int> neighbor;
  std::optional<int> same_language;
  std::optional<int> diplomatic_relation;  // 1..6
};

using CountryAttributeTable = std::map<std::string, CountryAttributes>;
using PairAttributeTable = std::map<std::pair<std::string, std::string>, PairAttributes>;

// alpha3,gdp,population,population_density,area,gini,democracy_index,
// press_freedom_index,continent,government,religion_<name>...,literacy_rate,
// internet_user_rate. Empty cells are missing. Throws kSchema when religion
// shares do not sum to 1 ± 1e-6 or an index is out of range.
CountryAttributeTable load_country_attributes(const std::string& path);
CountryAttributeTable parse_country_attributes(std::string_view csv_content);
// reporter,event_country,trade,investment,immigration,neighbor,same_language,
// diplomatic_relation
PairAttributeTable load_pair_attributes(const std::string& path);
PairAttributeTable parse_pair_attributes(std::string_view csv_content);

// −Σ p ln p over the shares (zeros contribute nothing).
double shannon_entropy(const std::vector<double>& shares);

// --- Factors ---------------------------------------------------------------

struct Observation {
  std::string reporter;
  std::string event_country;
  double y = 0;
};

// One observation per (reporter, event country) cell. Reporting on one's
// own country is skipped unless include_self.
std::vector<Observation> coverage_observations(const CoverageMatrix& m, bool include_self = false);

struct FactorOptions {
  double gdp_threshold = 500e9;  // USD
  double democracy_threshold = 5;
  double press_freedom_threshold = 50;
  double gini_threshold = 50;
  // Fill missing country attributes with the mean over listed countries
  // (mode for categorical ones). Off → kMissingKey.
  bool impute_country_attributes = false;
};

struct FactorMatrix {
  std::vector<std::string> names;      // the 47 factors, in table order
  std::vector<bool> binary;            // per column
  std::vector<Observation> rows;
  Eigen::MatrixXd values;              // rows × names; NaN marks missing
  std::size_t missing_pair_rows = 0;   // pairs absent from the pair table
  std::vector<std::string> warnings;

  std::optional<std::size_t> column(std::string_view name) const;
  Eigen::VectorXd y() const;
};

const std::vector<std::string>& factor_names();

// Missing pair rows default to trade = investment = immigration = 0,
// neighbor = same_language = 0, and diplomatic relation 1 (unknown).
FactorMatrix build_factors(const std::vector<Observation>& pairs, const CountryAttributeTable& attrs,
                           const PairAttributeTable& pair_attrs,
                           const std::map<std::string, double>& deaths_by_country,
                           const FactorOptions& options = {});
void write_factor_csv(const FactorMatrix& f, std::ostream& out);

// Deaths: mean-impute, log1p, min-max. Other continuous columns: mean-impute,
// min-max; a constant column becomes 0 with a warning. Binary columns pass
// through. Throws kInvalidArgument for an all-missing column or a missing
// binary value.
FactorMatrix preprocess(const FactorMatrix& factors, const std::string& deaths_column = "deaths");

enum class DvTransform { kRaw, kLog1p, kMinMax };
DvTransform parse_dv_transform(std::string_view s);
Eigen::VectorXd transform_dv(const Eigen::VectorXd& y, DvTransform t);

// --- Regression ------------------------------------------------------------

struct OlsResult {
  std::vector<std::string> names;  // "(intercept)" first when fitted
  Eigen::VectorXd beta, se, t, p;
  std::size_t n = 0;
  std::size_t k = 0;  // parameters, intercept included
  double rss = 0, tss = 0, r2 = 0, adj_r2 = 0, aic = 0;
  Eigen::VectorXd residuals;
};

// Least squares through column-pivoted QR. Throws kRankDeficient naming the
// dependent columns, or kInvalidArgument when n ≤ k.
OlsResult ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  const std::vector<std::string>& names, bool intercept = true);

std::string significance_stars(double p);

struct AicStep {
  std::string factor;  // "(intercept)" for the starting model
  double aic;
};

struct RegressionResult {
  OlsResult model;
  std::vector<std::string> selected;  // in order of entry
  std::vector<AicStep> trace;         // strictly decreasing
  std::vector<std::string> notes;
};

// Greedy forward selection on AIC from intercept + always_in. Each step adds
// the candidate with the lowest AIC (first column on ties) if it lowers AIC
// strictly. Rank-deficient candidates are skipped with a note.
RegressionResult forward_aic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             const std::vector<std::string>& names,
                             const std::vector<std::string>& always_in = {}, int jobs = 1);

// VIF_j = 1 / (1 − R²_j), regressing column j on the others plus an
// intercept. Perfect collinearity gives +infinity.
std::vector<double> vif(const Eigen::MatrixXd& X);

nlohmann::ordered_json regression_to_json(const RegressionResult& r,
                                          const std::vector<double>& vifs = {});
std::string regression_table(const RegressionResult& r, const std::string& title = "");

}  // namespace fame
