#pragma once

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "llob/errors.hpp"

namespace llob {

// Flat key = value configuration. Keys must be declared with a default before they
// can be set, so a typo is an error rather than a silently ignored line.
class Config {
 public:
  void declare(const std::string& key, const std::string& value, const std::string& help = "") {
    if (!values_.count(key)) order_.push_back(key);
    values_[key] = value;
    help_[key] = help;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  void set(const std::string& key, const std::string& value) {
    if (!has(key)) throw input_error("unknown config key '" + key + "'");
    values_[key] = value;
  }

  // "key=value", as given on the command line
  void set_assignment(const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw input_error("expected key=value, got '" + kv + "'");
    set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }

  // Lines of "key = value"; '#' and ';' start comments; a lone [section] header is
  // accepted and ignored.
  void parse(std::istream& in, const std::string& source = "config") {
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
      ++no;
      const auto hash = line.find_first_of("#;");
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty() || (line.front() == '[' && line.back() == ']')) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw input_error(source + ":" + std::to_string(no) + ": expected key = value");
      const std::string key = trim(line.substr(0, eq));
      if (!has(key)) throw input_error(source + ":" + std::to_string(no) + ": unknown config key '" + key + "'");
      values_[key] = trim(line.substr(eq + 1));
    }
  }

  void load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw input_error("cannot open config file '" + path + "'");
    parse(f, path);
  }

  const std::string& text(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw input_error("config key '" + key + "' was never declared");
    return it->second;
  }

  double real(const std::string& key) const {
    const std::string& s = text(key);
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw input_error("config key '" + key + "': not a number: '" + s + "'");
    return v;
  }

  long long integer(const std::string& key) const {
    const std::string& s = text(key);
    long long v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw input_error("config key '" + key + "': not an integer: '" + s + "'");
    return v;
  }

  std::size_t count(const std::string& key) const {
    const long long v = integer(key);
    if (v < 0) throw input_error("config key '" + key + "' must be nonnegative");
    return static_cast<std::size_t>(v);
  }

  bool flag(const std::string& key) const {
    const std::string& s = text(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw input_error("config key '" + key + "': not a boolean: '" + s + "'");
  }

  const std::vector<std::string>& keys() const { return order_; }
  const std::string& help(const std::string& key) const { return help_.at(key); }

  // Every key in declaration order, defaults included.
  std::string dump() const {
    std::ostringstream o;
    for (const auto& k : order_) o << k << " = " << values_.at(k) << '\n';
    return o.str();
  }

  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
  }

 private:
  std::map<std::string, std::string> values_, help_;
  std::vector<std::string> order_;
};

}  // namespace llob
