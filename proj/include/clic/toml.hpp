#pragma once

// Minimal TOML reader covering the subset scenario files use: [tables],
// [[arrays of tables]], key = value with string / integer / float / boolean /
// single-level array values, and # comments.  Dotted keys and inline tables
// are not supported.

#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "clic/types.hpp"

namespace clic::io {

class TomlValue;
using TomlArray = std::vector<TomlValue>;

class TomlTable {
 public:
  bool has(const std::string& key) const;
  const TomlValue& at(const std::string& key) const;  // throws DataError

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& dflt) const;
  long get_int(const std::string& key) const;
  long get_int(const std::string& key, long dflt) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double dflt) const;
  bool get_bool(const std::string& key, bool dflt) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<std::string> get_strings(const std::string& key) const;

  const TomlTable& table(const std::string& key) const;
  const std::vector<TomlTable>& table_array(const std::string& key) const;
  bool has_table(const std::string& key) const;
  bool has_table_array(const std::string& key) const;

  std::map<std::string, TomlValue> values;
  std::map<std::string, TomlTable> tables;
  std::map<std::string, std::vector<TomlTable>> arrays;
};

class TomlValue {
 public:
  std::variant<std::string, long, double, bool, TomlArray> v;

  bool is_string() const { return std::holds_alternative<std::string>(v); }
  bool is_number() const {
    return std::holds_alternative<long>(v) || std::holds_alternative<double>(v);
  }
  double as_double() const;
};

TomlTable parse_toml_file(const std::string& path);
TomlTable parse_toml(const std::string& text, const std::string& origin);

}  // namespace clic::io
