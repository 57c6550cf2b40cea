// Flat key-value experiment configuration: "key = value" lines with '#'
// comments, diff-friendly and replayable. Sweep axes are declared as
// "sweep.<key> = v1,v2,v3". Later assignments win, so flag overrides are
// just appended sets.
#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bombworks/errors.hpp"

namespace bombworks {

struct SweepAxis {
  std::string key;
  std::vector<std::string> values;
};

class KeyValueConfig {
 public:
  void set(const std::string& key, const std::string& value) {
    auto it = index_.find(key);
    if (it == index_.end()) {
      index_[key] = entries_.size();
      entries_.push_back({key, value});
    } else {
      entries_[it->second].second = value;
    }
  }

  bool has(const std::string& key) const { return index_.count(key) > 0; }

  std::string get(const std::string& key, const std::string& fallback) const {
    auto it = index_.find(key);
    return it == index_.end() ? fallback : entries_[it->second].second;
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = index_.find(key);
    if (it == index_.end()) return fallback;
    try {
      return std::stod(entries_[it->second].second);
    } catch (const std::exception&) {
      throw ParameterError("config: key '" + key + "' is not a number: " +
                           entries_[it->second].second);
    }
  }

  long get_int(const std::string& key, long fallback) const {
    auto it = index_.find(key);
    if (it == index_.end()) return fallback;
    try {
      return std::stol(entries_[it->second].second);
    } catch (const std::exception&) {
      throw ParameterError("config: key '" + key + "' is not an integer: " +
                           entries_[it->second].second);
    }
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto it = index_.find(key);
    if (it == index_.end()) return fallback;
    const std::string& v = entries_[it->second].second;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ParameterError("config: key '" + key + "' is not a boolean: " + v);
  }

  std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const {
    auto it = index_.find(key);
    if (it == index_.end()) return fallback;
    std::vector<int> out;
    std::istringstream ss(entries_[it->second].second);
    std::string cell;
    while (std::getline(ss, cell, ','))
      if (!cell.empty()) out.push_back(std::stoi(cell));
    if (out.empty()) throw ParameterError("config: key '" + key + "' is an empty list");
    return out;
  }

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  // Axes declared as "sweep.<key> = v1,v2,...", in declaration order.
  std::vector<SweepAxis> sweep_axes() const {
    std::vector<SweepAxis> axes;
    for (const auto& [key, value] : entries_) {
      if (key.rfind("sweep.", 0) != 0) continue;
      SweepAxis axis;
      axis.key = key.substr(6);
      std::istringstream ss(value);
      std::string cell;
      while (std::getline(ss, cell, ','))
        if (!cell.empty()) axis.values.push_back(cell);
      if (axis.values.empty())
        throw ParameterError("config: sweep axis '" + axis.key + "' has no values");
      axes.push_back(std::move(axis));
    }
    return axes;
  }

  void parse(std::istream& is) {
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      std::string s = strip(line);
      if (s.empty() || s[0] == '#' || s[0] == ';') continue;
      std::size_t eq = s.find('=');
      if (eq == std::string::npos)
        throw ParameterError("config: line " + std::to_string(line_no) + " has no '='");
      std::string key = strip(s.substr(0, eq));
      std::string value = strip(s.substr(eq + 1));
      if (key.empty())
        throw ParameterError("config: line " + std::to_string(line_no) + " has an empty key");
      set(key, value);
    }
  }

  void parse_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ParameterError("config: cannot open " + path);
    parse(is);
  }

  void serialize(std::ostream& os) const {
    for (const auto& [key, value] : entries_) os << key << " = " << value << "\n";
  }

  std::string serialize() const {
    std::ostringstream ss;
    serialize(ss);
    return ss.str();
  }

 private:
  static std::string strip(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
  }

  std::vector<std::pair<std::string, std::string>> entries_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace bombworks
