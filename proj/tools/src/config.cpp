#include "config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "hjlab/error.hpp"
#include "hjlab/expression.hpp"

namespace hjlab::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::parse(const std::string& text, const Schema& schema, const std::string& source) {
  Config c;
  c.source_ = source;
  c.text_ = text;
  std::istringstream in(text);
  std::string raw, section;
  int line = 0;
  const auto where = [&] { return source + ":" + std::to_string(line) + ": "; };
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    const auto hash = s.find_first_of("#;");
    if (hash != std::string::npos) s.erase(hash);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(where() + "unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      if (!schema.contains(section)) throw ConfigError(where() + "unknown section [" + section + "]");
      c.data_[section];
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(where() + "expected `key = value`");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (section.empty()) throw ConfigError(where() + "key `" + key + "` outside any section");
    if (key.empty()) throw ConfigError(where() + "empty key");
    if (!schema.at(section).contains(key))
      throw ConfigError(where() + "unknown key `" + key + "` in [" + section + "]");
    auto& sec = c.data_[section];
    if (sec.contains(key))
      throw ConfigError(where() + "duplicate key `" + key + "` (first set on line " +
                        std::to_string(sec[key].line) + ")");
    sec[key] = Entry{value, line};
  }
  return c;
}

Config Config::load(const std::string& path, const Schema& schema) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open config file " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse(ss.str(), schema, path);
}

bool Config::has(const std::string& section, const std::string& key) const { return find(section, key) != nullptr; }

const Entry* Config::find(const std::string& section, const std::string& key) const {
  const auto s = data_.find(section);
  if (s == data_.end()) return nullptr;
  const auto k = s->second.find(key);
  return k == s->second.end() ? nullptr : &k->second;
}

void Config::fail(const std::string& section, const std::string& key, const std::string& message) const {
  const Entry* e = find(section, key);
  const std::string at = e ? source_ + ":" + std::to_string(e->line) : source_;
  throw ConfigError(at + ": [" + section + "] " + key + ": " + message);
}

const Entry& Config::required(const std::string& section, const std::string& key) const {
  const Entry* e = find(section, key);
  if (!e) throw ConfigError(source_ + ": missing required key `" + key + "` in [" + section + "]");
  return *e;
}

double Config::to_number(const std::string& section, const std::string& key, const Entry& e) const {
  try {
    const Expression ex = Expression::parse(e.value, 1);
    if (!ex.is_constant()) fail(section, key, "expected a number, got `" + e.value + "`");
    const double zero = 0.0;
    const double v = ex({&zero, 1});
    if (!std::isfinite(v)) fail(section, key, "value is not finite");
    return v;
  } catch (const Error& err) {
    fail(section, key, err.what());
  }
}

std::string Config::string(const std::string& section, const std::string& key) const {
  return required(section, key).value;
}

std::string Config::string(const std::string& section, const std::string& key, const std::string& def) const {
  const Entry* e = find(section, key);
  return e ? e->value : def;
}

double Config::number(const std::string& section, const std::string& key) const {
  return to_number(section, key, required(section, key));
}

double Config::number(const std::string& section, const std::string& key, double def) const {
  const Entry* e = find(section, key);
  return e ? to_number(section, key, *e) : def;
}

int Config::integer(const std::string& section, const std::string& key, int def) const {
  const Entry* e = find(section, key);
  if (!e) return def;
  const double v = to_number(section, key, *e);
  if (v != std::floor(v) || std::abs(v) > 1e9) fail(section, key, "expected an integer");
  return static_cast<int>(v);
}

bool Config::boolean(const std::string& section, const std::string& key, bool def) const {
  const Entry* e = find(section, key);
  if (!e) return def;
  if (e->value == "true" || e->value == "yes" || e->value == "1") return true;
  if (e->value == "false" || e->value == "no" || e->value == "0") return false;
  fail(section, key, "expected true or false");
}

std::vector<double> Config::numbers(const std::string& section, const std::string& key) const {
  const Entry& e = required(section, key);
  std::vector<double> out;
  std::string item;
  std::istringstream in(e.value);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) fail(section, key, "empty list item");
    out.push_back(to_number(section, key, Entry{item, e.line}));
  }
  if (out.empty()) fail(section, key, "empty list");
  return out;
}

std::vector<double> Config::numbers(const std::string& section, const std::string& key,
                                    const std::vector<double>& def) const {
  return has(section, key) ? numbers(section, key) : def;
}

}  // namespace hjlab::cli
