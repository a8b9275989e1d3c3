#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace mcao {

// Sectioned key/value configuration. Keys are addressed as "section.key".
// Every lookup first consults the environment: MCAO_SECTION_KEY (upper case,
// dots replaced by underscores) overrides the file value.
class Config {
 public:
  static Config load(const std::filesystem::path& path);
  static Config parse(std::string_view text);

  void set(const std::string& key, std::string value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const;
  std::vector<std::string> get_strings(const std::string& key, std::vector<std::string> fallback) const;

  // Keys of the form "section.prefix*" present in the file.
  std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

  // File keys that no component ever looked up; typos end up here.
  std::vector<std::string> unused_keys() const;

  std::string env_prefix = "MCAO_";

 private:
  std::optional<std::string> lookup(const std::string& key) const;

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

}  // namespace mcao
