// Key-value run configuration: `key = value` lines, '#' comments, repeatable
// KEY=VALUE overrides layered on top.

#ifndef CAST_CONFIG_HPP
#define CAST_CONFIG_HPP

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "cast/common.hpp"

namespace cast {

class KeyValueConfig {
 public:
  KeyValueConfig() = default;
  static KeyValueConfig from_file(const std::string& path);

  void set(const std::string& key, const std::string& value);
  void apply_override(const std::string& key_equals_value);

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key) const;  // throws if missing
  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::int64_t get_int(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_list(const std::string& key) const;  // comma-split

  const std::map<std::string, std::string>& entries() const { return entries_; }
  nlohmann::json to_json() const;

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace cast

#endif  // CAST_CONFIG_HPP
