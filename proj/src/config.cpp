#include "rwre/config.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <charconv>
#include <fstream>
#include <sstream>

#include "rwre/error.hpp"

namespace rwre {

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw Error(ErrorCode::ConfigError, "key '" + key + "': cannot parse '" + value + "' as " + expected);
}

template <class T>
T parse_number(const std::string& key, const std::string& text, const char* expected) {
  const std::string v = boost::algorithm::trim_copy(text);
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, text, expected);
  return out;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  boost::algorithm::split(parts, text, boost::algorithm::is_any_of(","));
  for (auto& p : parts) boost::algorithm::trim(p);
  return parts;
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& source) {
  Config c;
  c.source_ = source;
  c.raw_ = text;
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorCode::ConfigError, source + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw Error(ErrorCode::ConfigError, "key '" + section + "': keys must live inside a [section]");
    }
    for (const auto& [key, value] : body) {
      c.values_[section + "." + key] = boost::algorithm::trim_copy(value.data());
    }
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

std::string Config::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(raw_)));
  return buf;
}

std::string Config::get_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorCode::ConfigError, "missing required key '" + key + "'");
  return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}

long long Config::get_int(const std::string& key) const {
  return parse_number<long long>(key, get_string(key), "an integer");
}

long long Config::get_int(const std::string& key, long long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::uint64_t Config::get_uint64(const std::string& key, std::uint64_t fallback) const {
  return has(key) ? parse_number<std::uint64_t>(key, get_string(key), "an unsigned 64-bit integer") : fallback;
}

double Config::get_double(const std::string& key) const {
  return parse_number<double>(key, get_string(key), "a real number");
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::vector<double> Config::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& p : split_list(get_string(key))) out.push_back(parse_number<double>(key, p, "a list of reals"));
  return out;
}

std::vector<long long> Config::get_ints(const std::string& key) const {
  std::vector<long long> out;
  for (const auto& p : split_list(get_string(key))) {
    out.push_back(parse_number<long long>(key, p, "a list of integers"));
  }
  return out;
}

std::vector<long long> Config::get_ints(const std::string& key, std::vector<long long> fallback) const {
  return has(key) ? get_ints(key) : fallback;
}

void Config::check_known(const std::set<std::string>& allowed) const {
  for (const auto& [key, value] : values_) {
    if (!allowed.contains(key)) throw Error(ErrorCode::ConfigError, "unknown key '" + key + "'");
  }
}

nlohmann::json Config::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : values_) j[k] = v;
  return j;
}

}  // namespace rwre
