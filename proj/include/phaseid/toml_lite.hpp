#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "phaseid/common.hpp"

namespace phaseid {

// Minimal TOML subset: [sections], key = value with strings, integers,
// floats, booleans and flat arrays, plus # comments. Enough for scenario
// configs; nested tables are out of scope.
class TomlTable {
 public:
  struct Value {
    std::string raw;
    bool is_string = false;
    std::vector<std::string> array;  // raw elements when the value is an array
    bool is_array = false;
  };

  static TomlTable parse(const std::string& text) {
    TomlTable t;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string s = strip(line);
      if (s.empty() || s[0] == '#') continue;
      if (s.front() == '[') {
        if (s.back() != ']') throw ConfigError("toml line " + std::to_string(lineno) + ": bad section");
        section = strip(s.substr(1, s.size() - 2));
        continue;
      }
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("toml line " + std::to_string(lineno) + ": expected key = value");
      const std::string key = strip(s.substr(0, eq));
      const std::string full = section.empty() ? key : section + "." + key;
      t.values_[full] = parse_value(strip(s.substr(eq + 1)), lineno);
    }
    return t;
  }

  static TomlTable load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key) const {
    const auto& v = at(key);
    if (!v.is_string) throw ConfigError("config key " + key + " must be a string");
    return v.raw;
  }
  std::string get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
  }

  double get_double(const std::string& key) const {
    const auto& v = at(key);
    if (v.is_string || v.is_array) throw ConfigError("config key " + key + " must be a number");
    try {
      return std::stod(v.raw);
    } catch (...) {
      throw ConfigError("config key " + key + " is not a number: " + v.raw);
    }
  }
  double get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
  }

  std::int64_t get_int(const std::string& key) const {
    const auto& v = at(key);
    if (v.is_string || v.is_array) throw ConfigError("config key " + key + " must be an integer");
    try {
      return std::stoll(v.raw);
    } catch (...) {
      throw ConfigError("config key " + key + " is not an integer: " + v.raw);
    }
  }
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
    return has(key) ? get_int(key) : fallback;
  }

  bool get_bool(const std::string& key) const {
    const auto& v = at(key);
    if (v.raw == "true") return true;
    if (v.raw == "false") return false;
    throw ConfigError("config key " + key + " must be true or false");
  }
  bool get_bool(const std::string& key, bool fallback) const {
    return has(key) ? get_bool(key) : fallback;
  }

  std::vector<std::string> get_string_array(const std::string& key) const {
    const auto& v = at(key);
    if (!v.is_array) throw ConfigError("config key " + key + " must be an array");
    return v.array;
  }
  std::vector<std::int64_t> get_int_array(const std::string& key) const {
    std::vector<std::int64_t> out;
    for (const auto& e : get_string_array(key)) out.push_back(std::stoll(e));
    return out;
  }

  const std::map<std::string, Value>& entries() const { return values_; }

 private:
  static std::string strip(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
  }

  static Value parse_value(std::string s, int lineno) {
    // trailing comment (outside quotes)
    bool in_quote = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '"') in_quote = !in_quote;
      if (s[i] == '#' && !in_quote) {
        s = strip(s.substr(0, i));
        break;
      }
    }
    Value v;
    if (s.empty()) throw ConfigError("toml line " + std::to_string(lineno) + ": empty value");
    if (s.front() == '"') {
      if (s.size() < 2 || s.back() != '"')
        throw ConfigError("toml line " + std::to_string(lineno) + ": unterminated string");
      v.is_string = true;
      v.raw = s.substr(1, s.size() - 2);
      return v;
    }
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError("toml line " + std::to_string(lineno) + ": unterminated array");
      v.is_array = true;
      std::string body = s.substr(1, s.size() - 2);
      std::string cur;
      bool quote = false;
      for (char c : body) {
        if (c == '"') {
          quote = !quote;
          continue;
        }
        if (c == ',' && !quote) {
          const std::string e = strip(cur);
          if (!e.empty()) v.array.push_back(e);
          cur.clear();
        } else {
          cur += c;
        }
      }
      const std::string e = strip(cur);
      if (!e.empty()) v.array.push_back(e);
      return v;
    }
    v.raw = s;
    return v;
  }

  const Value& at(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing config key: " + key);
    return it->second;
  }

  std::map<std::string, Value> values_;
};

}  // namespace phaseid
