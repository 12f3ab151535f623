#pragma once

// Experiment configuration: INI text with [sections] and key = value lines.
// Keys are addressed as "section.key". Every accessor failure names the key.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

namespace rwre {

std::uint64_t fnv1a(std::string_view bytes);

class Config {
 public:
  static Config parse(const std::string& text, const std::string& source = "<config>");
  static Config load(const std::filesystem::path& path);

  const std::string& source() const noexcept { return source_; }
  /// FNV-1a of the raw file bytes, as 16 hex digits.
  std::string hash() const;

  bool has(const std::string& key) const { return values_.contains(key); }
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::uint64_t get_uint64(const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  /// Comma-separated reals.
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<long long> get_ints(const std::string& key) const;
  std::vector<long long> get_ints(const std::string& key, std::vector<long long> fallback) const;

  /// ConfigError naming the first key not in `allowed`.
  void check_known(const std::set<std::string>& allowed) const;

  nlohmann::json to_json() const;

 private:
  std::string source_;
  std::string raw_;
  std::map<std::string, std::string> values_;
};

}  // namespace rwre
