#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace hjlab::cli {

/// Raised for anything the user can fix in the config file; maps to exit 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Entry {
  std::string value;
  int line = 0;
};

/// Sectioned `key = value` file. `#` and `;` start comments; keys are unique
/// within a section. Every key must appear in the schema passed to `parse`.
class Config {
 public:
  using Schema = std::map<std::string, std::set<std::string>>;

  static Config parse(const std::string& text, const Schema& schema, const std::string& source = "config");
  static Config load(const std::string& path, const Schema& schema);

  bool has(const std::string& section, const std::string& key) const;
  const Entry* find(const std::string& section, const std::string& key) const;

  std::string string(const std::string& section, const std::string& key) const;
  std::string string(const std::string& section, const std::string& key, const std::string& def) const;
  /// Numbers accept constant expressions such as `1/64` or `pi/2`.
  double number(const std::string& section, const std::string& key) const;
  double number(const std::string& section, const std::string& key, double def) const;
  int integer(const std::string& section, const std::string& key, int def) const;
  bool boolean(const std::string& section, const std::string& key, bool def) const;
  /// Comma-separated list of numbers.
  std::vector<double> numbers(const std::string& section, const std::string& key) const;
  std::vector<double> numbers(const std::string& section, const std::string& key,
                              const std::vector<double>& def) const;

  /// "source:line: [section] key: message"
  [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& message) const;

  const std::string& text() const { return text_; }
  const std::string& source() const { return source_; }

 private:
  const Entry& required(const std::string& section, const std::string& key) const;
  double to_number(const std::string& section, const std::string& key, const Entry& e) const;

  std::string source_;
  std::string text_;
  std::map<std::string, std::map<std::string, Entry>> data_;
};

}  // namespace hjlab::cli
