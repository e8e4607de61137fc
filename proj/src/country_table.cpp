#include "fame/country_table.hpp"

#include "fame/csv.hpp"
#include "fame/embedded.hpp"
#include "fame/error.hpp"
#include "fame/text.hpp"

namespace fame {
namespace {

CountryTable from_table(const csv::Table& t, std::string_view origin) {
  CountryTable table;
  const auto a3 = t.require_column("alpha3", origin);
  const auto name = t.require_column("name", origin);
  const auto a2 = t.column("alpha2");
  const auto aliases = t.column("aliases");
  for (const auto& row : t.rows) {
    CountryInfo info;
    info.alpha3 = std::string(text::trim(row[a3]));
    info.name = std::string(text::trim(row[name]));
    if (a2) info.alpha2 = std::string(text::trim(row[*a2]));
    if (aliases) info.aliases = csv::split(row[*aliases], ';');
    if (info.alpha3.empty()) continue;
    table.add(std::move(info));
  }
  return table;
}

std::string alias_key(std::string_view s) { return text::normalize_match(s); }

}  // namespace

CountryTable CountryTable::load(const std::string& path) {
  return from_table(csv::read_file(path), path);
}

CountryTable CountryTable::parse(std::string_view csv_content) {
  return from_table(csv::read_string(csv_content), "<country table>");
}

const CountryTable& CountryTable::builtin() {
  static const CountryTable table = parse(embedded_data("countries.csv"));
  return table;
}

void CountryTable::add(CountryInfo info) {
  for (char& c : info.alpha3) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 32);
  }
  if (info.alpha3.size() != 3) {
    throw Error(ErrorCode::kSchema, "country code '" + info.alpha3 + "' is not alpha-3");
  }
  if (by_code_.count(info.alpha3)) {
    throw Error(ErrorCode::kSchema, "duplicate country code " + info.alpha3);
  }
  const std::size_t idx = countries_.size();
  by_code_[info.alpha3] = idx;
  by_alias_.emplace(alias_key(info.alpha3), idx);
  if (!info.alpha2.empty()) by_alias_.emplace(alias_key(info.alpha2), idx);
  if (!info.name.empty()) by_alias_.emplace(alias_key(info.name), idx);
  for (const auto& a : info.aliases) by_alias_.emplace(alias_key(a), idx);
  countries_.push_back(std::move(info));
}

std::optional<std::string> CountryTable::resolve(std::string_view name_or_code) const {
  const auto key = alias_key(text::trim(name_or_code));
  if (key.empty()) return std::nullopt;
  auto it = by_alias_.find(key);
  if (it == by_alias_.end()) return std::nullopt;
  return countries_[it->second].alpha3;
}

const CountryInfo* CountryTable::find(std::string_view alpha3) const {
  auto it = by_code_.find(std::string(alpha3));
  return it == by_code_.end() ? nullptr : &countries_[it->second];
}

std::string CountryTable::display_name(std::string_view alpha3) const {
  const auto* info = find(alpha3);
  return info ? info->name : std::string(alpha3);
}

}  // namespace fame
