#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace cgswap {

/// Line-oriented `key = value` file. `#` starts a comment; blank lines are
/// ignored; later keys override earlier ones.
class ConfigFile {
 public:
  static ConfigFile parse(std::istream& in, const std::string& source = "<config>");
  static ConfigFile load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

  std::optional<std::string> get(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  int get_int(const std::string& key, int fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;

  /// Keys relative paths are resolved against (the file's directory).
  const std::filesystem::path& base_dir() const noexcept { return base_; }
  std::filesystem::path get_path(const std::string& key, const std::filesystem::path& fallback) const;

  /// ConfigError listing any key not in `known`.
  void require_known(const std::set<std::string>& known) const;

  const std::map<std::string, std::string>& values() const noexcept { return values_; }
  const std::string& source() const noexcept { return source_; }

 private:
  std::map<std::string, std::string> values_;
  std::string source_;
  std::filesystem::path base_;
};

/// "1.0,0.667" -> {1.0, 0.667}. Throws ConfigError on malformed entries.
std::vector<double> parse_double_list(const std::string& text);
std::vector<int> parse_int_list(const std::string& text);

}  // namespace cgswap
