#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fame {

struct CountryInfo {
  std::string alpha3;
  std::string alpha2;
  std::string name;  // display name used in prompts and reports
  std::vector<std::string> aliases;
};

// ISO-3166 country table with an alias map from heterogeneous source names
// (EM-DAT, GTD, gazetteers) to alpha-3 codes. Lookup is case-insensitive.
class CountryTable {
 public:
  CountryTable() = default;

  // CSV with columns alpha3, alpha2, name, aliases (';'-separated).
  static CountryTable load(const std::string& path);
  static CountryTable parse(std::string_view csv_content);
  // The ISO table shipped in data/countries.csv.
  static const CountryTable& builtin();

  // Accepts alpha-3, alpha-2, display name, or any alias.
  std::optional<std::string> resolve(std::string_view name_or_code) const;
  const CountryInfo* find(std::string_view alpha3) const;
  bool contains(std::string_view alpha3) const { return find(alpha3) != nullptr; }
  // Display name, or the code itself when unknown.
  std::string display_name(std::string_view alpha3) const;

  const std::vector<CountryInfo>& countries() const { return countries_; }
  void add(CountryInfo info);

 private:
  std::vector<CountryInfo> countries_;
  std::unordered_map<std::string, std::size_t> by_code_;
  std::unordered_map<std::string, std::size_t> by_alias_;
};

}  // namespace fame
