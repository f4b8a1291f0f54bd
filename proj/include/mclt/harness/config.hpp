#ifndef MCLT_HARNESS_CONFIG_HPP
#define MCLT_HARNESS_CONFIG_HPP

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mclt/errors.hpp"

namespace mclt::harness {

/// Validation failure; keys() lists every offending key.
class ConfigError : public ArgumentError {
public:
  ConfigError(const std::string& what, std::vector<std::string> keys)
      : ArgumentError(what), keys_(std::move(keys)) {}
  const std::vector<std::string>& keys() const noexcept { return keys_; }

private:
  std::vector<std::string> keys_;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto p = s.find(sep, start);
    out.push_back(trim(s.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start)));
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  return out;
}

template <class T>
std::optional<T> parse_number(const std::string& s) {
  T v{};
  const char* b = s.data();
  const char* e = b + s.size();
  if (b != e && *b == '+') ++b;
  const auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e || s.empty()) return std::nullopt;
  return v;
}

inline bool valid_key(std::string_view k) {
  if (k.empty() || k.front() == '.' || k.back() == '.') return false;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const char c = k[i];
    if (c == '.' && k[i + 1] == '.') return false;
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) return false;
  }
  return true;
}

}  // namespace detail

/// Flat `key = value` text with dotted namespaces; `#` starts a comment.
/// Keys are kept sorted so the echo is canonical.
class Config {
public:
  static Config parse(std::string_view text) {
    Config c;
    std::vector<std::string> bad;
    std::istringstream in{std::string(text)};
    std::string line;
    for (int no = 1; std::getline(in, line); ++no) {
      if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
      const std::string t = detail::trim(line);
      if (t.empty()) continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos) {
        bad.push_back("line " + std::to_string(no) + ": expected key = value");
        continue;
      }
      const std::string key = detail::trim(std::string_view(t).substr(0, eq));
      if (!detail::valid_key(key)) {
        bad.push_back("line " + std::to_string(no) + ": bad key '" + key + "'");
        continue;
      }
      if (c.values_.count(key)) {
        bad.push_back(key + " (line " + std::to_string(no) + "): duplicate key");
        continue;
      }
      c.values_[key] = detail::trim(std::string_view(t).substr(eq + 1));
    }
    if (!bad.empty()) {
      std::string msg = "config syntax:";
      for (const auto& b : bad) msg += "\n  " + b;
      throw ConfigError(msg, bad);
    }
    return c;
  }

  static Config load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ArgumentError("cannot read config file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::string& at(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ArgumentError("config: missing key " + key);
    return it->second;
  }
  std::string get(const std::string& key, const std::string& fallback) const {
    return has(key) ? at(key) : fallback;
  }
  void set(const std::string& key, std::string value) {
    if (!detail::valid_key(key)) throw ArgumentError("config: bad key '" + key + "'");
    values_[key] = std::move(value);
  }
  void erase(const std::string& key) { values_.erase(key); }
  const std::map<std::string, std::string>& values() const { return values_; }

  /// Canonical text: one sorted `key = value` line per entry.
  std::string text() const {
    std::string s;
    for (const auto& [k, v] : values_) s += k + " = " + v + "\n";
    return s;
  }

  bool operator==(const Config&) const = default;

private:
  std::map<std::string, std::string> values_;
};

// ---- typed schema ---------------------------------------------------------

enum class ValueType { Int, UInt64, Double, Bool, String, IntList, DoubleList, Choice };

struct KeySpec {
  ValueType type = ValueType::String;
  bool required = false;
  std::string fallback;  // empty: no default
  std::vector<std::string> choices;
  std::string help;
};

using Schema = std::map<std::string, KeySpec>;

inline std::optional<bool> parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  return std::nullopt;
}

inline std::optional<std::vector<double>> parse_double_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : detail::split(s, ',')) {
    const auto v = detail::parse_number<double>(item);
    if (!v) return std::nullopt;
    out.push_back(*v);
  }
  return out;
}

/// Comma list of integers; `a..b` expands to the doubling sequence a, 2a, …, b.
inline std::optional<std::vector<long>> parse_int_list(const std::string& s) {
  std::vector<long> out;
  for (const auto& item : detail::split(s, ',')) {
    if (const auto dots = item.find(".."); dots != std::string::npos) {
      const auto a = detail::parse_number<long>(detail::trim(item.substr(0, dots)));
      const auto b = detail::parse_number<long>(detail::trim(item.substr(dots + 2)));
      if (!a || !b || *a <= 0 || *b < *a) return std::nullopt;
      for (long v = *a; v <= *b; v *= 2) out.push_back(v);
      if (out.back() != *b) return std::nullopt;
      continue;
    }
    const auto v = detail::parse_number<long>(item);
    if (!v) return std::nullopt;
    out.push_back(*v);
  }
  return out;
}

/// Problem with one value, or nullopt when it parses as the declared type.
inline std::optional<std::string> check_value(const KeySpec& spec, const std::string& v) {
  switch (spec.type) {
    case ValueType::Int:
      if (!detail::parse_number<long>(v)) return "not an integer: '" + v + "'";
      break;
    case ValueType::UInt64:
      if (!detail::parse_number<std::uint64_t>(v)) return "not a 64-bit unsigned integer: '" + v + "'";
      break;
    case ValueType::Double:
      if (!detail::parse_number<double>(v)) return "not a number: '" + v + "'";
      break;
    case ValueType::Bool:
      if (!parse_bool(v)) return "not a boolean: '" + v + "'";
      break;
    case ValueType::IntList:
      if (!parse_int_list(v)) return "not a list of integers: '" + v + "'";
      break;
    case ValueType::DoubleList:
      if (!parse_double_list(v)) return "not a list of numbers: '" + v + "'";
      break;
    case ValueType::Choice:
      if (std::find(spec.choices.begin(), spec.choices.end(), v) == spec.choices.end()) {
        std::string all;
        for (const auto& c : spec.choices) all += (all.empty() ? "" : "|") + c;
        return "expected one of " + all + ", got '" + v + "'";
      }
      break;
    case ValueType::String:
      if (v.empty()) return "empty value";
      break;
  }
  return std::nullopt;
}

/// A validated config: typed getters that fall back to schema defaults.
class ExperimentConfig {
public:
  ExperimentConfig(Config raw, Schema schema) : raw_(std::move(raw)), schema_(std::move(schema)) {}

  const Config& raw() const { return raw_; }
  const std::string& kind() const { return raw_.at("kind"); }
  bool has(const std::string& key) const { return raw_.has(key); }

  std::string str(const std::string& key) const { return value(key); }
  long integer(const std::string& key) const { return *detail::parse_number<long>(value(key)); }
  std::uint64_t u64(const std::string& key) const { return *detail::parse_number<std::uint64_t>(value(key)); }
  double number(const std::string& key) const { return *detail::parse_number<double>(value(key)); }
  bool flag(const std::string& key) const { return *parse_bool(value(key)); }
  std::vector<long> ints(const std::string& key) const { return *parse_int_list(value(key)); }
  std::vector<double> numbers(const std::string& key) const { return *parse_double_list(value(key)); }
  std::optional<double> maybe_number(const std::string& key) const {
    if (!raw_.has(key) && schema_.at(key).fallback.empty()) return std::nullopt;
    return number(key);
  }
  std::optional<std::uint64_t> seed() const {
    if (!raw_.has("seed")) return std::nullopt;
    return u64("seed");
  }

private:
  std::string value(const std::string& key) const {
    if (raw_.has(key)) return raw_.at(key);
    const auto it = schema_.find(key);
    if (it == schema_.end() || it->second.fallback.empty())
      throw ArgumentError("config: no value or default for " + key);
    return it->second.fallback;
  }

  Config raw_;
  Schema schema_;
};

/// Checks every key against the schema and collects all problems before
/// throwing: missing required keys, unknown keys and malformed values.
inline ExperimentConfig validate(const Config& cfg, const Schema& schema) {
  std::vector<std::string> keys, lines;
  for (const auto& [k, spec] : schema)
    if (spec.required && !cfg.has(k)) {
      keys.push_back(k);
      lines.push_back(k + ": missing" + (spec.help.empty() ? "" : " (" + spec.help + ")"));
    }
  for (const auto& [k, v] : cfg.values()) {
    const auto it = schema.find(k);
    if (it == schema.end()) {
      keys.push_back(k);
      lines.push_back(k + ": unknown key");
      continue;
    }
    if (const auto problem = check_value(it->second, v)) {
      keys.push_back(k);
      lines.push_back(k + ": " + *problem);
    }
  }
  if (!keys.empty()) {
    std::string msg = "invalid config (" + std::to_string(keys.size()) + " offending key" +
                      (keys.size() == 1 ? "" : "s") + "):";
    for (const auto& l : lines) msg += "\n  " + l;
    throw ConfigError(msg, keys);
  }
  return ExperimentConfig(cfg, schema);
}

}  // namespace mclt::harness

#endif  // MCLT_HARNESS_CONFIG_HPP
