#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "stationcast/errors.hpp"

namespace stationcast::config {

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

// strips an inline # comment, respecting double-quoted strings
inline std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) quoted = !quoted;
    else if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

inline std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    std::string out;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
      if (s[i] == '\\' && i + 2 < s.size()) {
        ++i;
        out += s[i];
      } else {
        out += s[i];
      }
    }
    return out;
  }
  return s;
}

inline std::vector<std::string> split_array(const std::string& body) {
  std::vector<std::string> items;
  std::string cur;
  bool quoted = false;
  for (char c : body) {
    if (c == '"') {
      quoted = !quoted;
      cur += c;
    } else if (c == ',' && !quoted) {
      items.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  cur = trim(cur);
  if (!cur.empty()) items.push_back(cur);
  return items;
}

}  // namespace detail

// Key-value configuration in a TOML-like syntax: [section] headers, key =
// value lines, "strings", bare numbers/booleans, single-line [a, b] arrays,
// and # comments. Keys are flattened to section.key.
class Config {
 public:
  static Config parse_string(const std::string& text, const std::string& origin = "<string>") {
    Config cfg;
    std::string section;
    std::size_t lineno = 0;
    std::string line;
    std::istringstream in(text);
    while (std::getline(in, line)) {
      ++lineno;
      line = detail::trim(detail::strip_comment(line));
      if (line.empty()) continue;
      if (line.front() == '[' && line.back() == ']') {
        section = detail::trim(line.substr(1, line.size() - 2));
        if (section.empty())
          throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
        continue;
      }
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
      std::string key = detail::trim(line.substr(0, eq));
      std::string value = detail::trim(line.substr(eq + 1));
      if (key.empty() || value.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key or value");
      if (!section.empty()) key = section + "." + key;

      if (value.front() == '[') {
        if (value.back() != ']')
          throw ConfigError(origin + ":" + std::to_string(lineno) + ": unterminated array");
        std::vector<std::string> items;
        for (auto& item : detail::split_array(value.substr(1, value.size() - 2)))
          items.push_back(detail::unquote(item));
        cfg.arrays_[key] = items;
      } else {
        cfg.values_[key] = detail::unquote(value);
      }
    }
    return cfg;
  }

  static Config parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingFileError("cannot open config " + path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return parse_string(text, path);
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  bool has(const std::string& key) const {
    return values_.count(key) > 0 || arrays_.count(key) > 0;
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      std::size_t pos = 0;
      std::int64_t v = std::stoll(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("");
      return v;
    } catch (...) {
      throw ConfigError("key " + key + ": '" + it->second + "' is not an integer");
    }
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      std::size_t pos = 0;
      double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("");
      return v;
    } catch (...) {
      throw ConfigError("key " + key + ": '" + it->second + "' is not a number");
    }
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true") return true;
    if (it->second == "false") return false;
    throw ConfigError("key " + key + ": '" + it->second + "' is not true/false");
  }

  std::vector<std::string> get_array(const std::string& key,
                                     std::vector<std::string> fallback) const {
    auto it = arrays_.find(key);
    if (it != arrays_.end()) return it->second;
    auto sv = values_.find(key);
    if (sv != values_.end()) return detail::split_array(sv->second);
    return fallback;
  }

  // canonical flat rendering, used for config-slice hashing
  std::string dump_keys(const std::vector<std::string>& prefixes) const {
    auto wanted = [&](const std::string& key) {
      for (const auto& p : prefixes) {
        if (key == p) return true;
        if (key.size() > p.size() && key.compare(0, p.size(), p) == 0 &&
            key[p.size()] == '.')
          return true;
      }
      return false;
    };
    std::string out;
    for (const auto& [k, v] : values_) {
      if (wanted(k)) out += k + "=" + v + "\n";
    }
    for (const auto& [k, items] : arrays_) {
      if (!wanted(k)) continue;
      out += k + "=[";
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ",";
        out += items[i];
      }
      out += "]\n";
    }
    return out;
  }

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, std::vector<std::string>> arrays_;
};

}  // namespace stationcast::config
