#pragma once

// Key/value experiment configuration files. One `key = value` pair per line,
// '#' starts a comment, nesting via dotted keys (numerics.m = 96). Values
// may be comma-separated lists. Later assignments override earlier ones.

#include <algorithm>
#include <cctype>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"

namespace shocklab {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline std::map<std::string, std::string> parse_config_stream(std::istream& is,
                                                              const std::string& name) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw UsageError(name + ":" + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw UsageError(name + ":" + std::to_string(lineno) + ": empty key");
    kv[key] = value;
  }
  return kv;
}

// Typed field readers with field-name diagnostics.

inline double config_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (trim(value.substr(used)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError("field '" + key + "': expected a number, got '" + value + "'");
}

inline long long config_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (trim(value.substr(used)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError("field '" + key + "': expected an integer, got '" + value + "'");
}

inline bool config_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "no") return false;
  throw UsageError("field '" + key + "': expected a boolean, got '" + value + "'");
}

template <class T, class Parse>
std::vector<T> config_list(const std::string& key, const std::string& value, Parse parse) {
  std::vector<T> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string it = trim(item);
    if (it.empty())
      throw UsageError("field '" + key + "': empty list element");
    out.push_back(parse(key, it));
  }
  if (out.empty()) throw UsageError("field '" + key + "': empty list");
  return out;
}

inline std::vector<double> config_double_list(const std::string& key, const std::string& value) {
  return config_list<double>(key, value, [](const std::string& k, const std::string& v) {
    return config_double(k, v);
  });
}

inline std::vector<int> config_int_list(const std::string& key, const std::string& value) {
  return config_list<int>(key, value, [](const std::string& k, const std::string& v) {
    return static_cast<int>(config_int(k, v));
  });
}

}  // namespace shocklab
