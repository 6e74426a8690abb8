#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace objreason {

/// Flat `key = value` configuration text. Lines starting with '#' are
/// comments. Typed getters throw ConfigError on malformed values.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  int get_int(const std::string& key, int fallback) const;
  long get_long(const std::string& key, long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_list(const std::string& key) const;  // comma separated

  /// Keys under `prefix.` with the prefix stripped.
  KeyValueConfig subset(const std::string& prefix) const;

  /// Throws ConfigError naming any key not in `known`.
  void check_known(const std::set<std::string>& known) const;

  /// Canonical text: one `key=value` per line in key order.
  std::string serialize() const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace objreason
