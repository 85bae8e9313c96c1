#include "clic/toml.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace clic::io {

namespace {

[[noreturn]] void fail(const std::string& origin, long line,
                       const std::string& what) {
  std::ostringstream msg;
  msg << origin << ": line " << line << ": " << what;
  throw DataError(msg.str());
}

std::string strip(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// removes a # comment that is not inside a string
std::string strip_comment(const std::string& s) {
  bool in_str = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) in_str = !in_str;
    if (s[i] == '#' && !in_str) return s.substr(0, i);
  }
  return s;
}

struct Parser {
  std::string origin;
  long line = 0;

  TomlValue parse_scalar(const std::string& tok) {
    TomlValue v;
    if (tok.size() >= 2 && tok.front() == '"' && tok.back() == '"') {
      std::string s;
      for (std::size_t i = 1; i + 1 < tok.size(); ++i) {
        if (tok[i] == '\\' && i + 2 < tok.size()) {
          ++i;
          switch (tok[i]) {
            case 'n': s += '\n'; break;
            case 't': s += '\t'; break;
            case '"': s += '"'; break;
            case '\\': s += '\\'; break;
            default: fail(origin, line, "unsupported escape in string");
          }
        } else {
          s += tok[i];
        }
      }
      v.v = s;
      return v;
    }
    if (tok == "true") { v.v = true; return v; }
    if (tok == "false") { v.v = false; return v; }
    try {
      if (tok.find_first_of(".eE") == std::string::npos) {
        std::size_t pos = 0;
        long iv = std::stol(tok, &pos);
        if (pos == tok.size()) { v.v = iv; return v; }
      }
      std::size_t pos = 0;
      double dv = std::stod(tok, &pos);
      if (pos == tok.size()) { v.v = dv; return v; }
    } catch (const std::exception&) {
    }
    fail(origin, line, "cannot parse value '" + tok + "'");
  }

  TomlValue parse_value(const std::string& text) {
    const std::string t = strip(text);
    if (t.empty()) fail(origin, line, "missing value");
    if (t.front() == '[') {
      if (t.back() != ']') fail(origin, line, "unterminated array");
      TomlArray arr;
      std::string inner = t.substr(1, t.size() - 2);
      std::string tok;
      bool in_str = false;
      int depth = 0;
      for (char ch : inner) {
        if (ch == '"') in_str = !in_str;
        if (!in_str && ch == '[') ++depth;
        if (!in_str && ch == ']') --depth;
        if (ch == ',' && !in_str && depth == 0) {
          if (!strip(tok).empty()) arr.push_back(parse_value(tok));
          tok.clear();
        } else {
          tok += ch;
        }
      }
      if (!strip(tok).empty()) arr.push_back(parse_value(tok));
      TomlValue v;
      v.v = std::move(arr);
      return v;
    }
    return parse_scalar(t);
  }
};

}  // namespace

double TomlValue::as_double() const {
  if (std::holds_alternative<long>(v))
    return static_cast<double>(std::get<long>(v));
  if (std::holds_alternative<double>(v)) return std::get<double>(v);
  throw DataError("TOML value is not a number");
}

bool TomlTable::has(const std::string& key) const {
  return values.count(key) > 0;
}

const TomlValue& TomlTable::at(const std::string& key) const {
  auto it = values.find(key);
  if (it == values.end()) throw DataError("missing TOML key: " + key);
  return it->second;
}

std::string TomlTable::get_string(const std::string& key) const {
  const TomlValue& v = at(key);
  if (!v.is_string()) throw DataError("TOML key is not a string: " + key);
  return std::get<std::string>(v.v);
}

std::string TomlTable::get_string(const std::string& key,
                                  const std::string& dflt) const {
  return has(key) ? get_string(key) : dflt;
}

long TomlTable::get_int(const std::string& key) const {
  const TomlValue& v = at(key);
  if (!std::holds_alternative<long>(v.v))
    throw DataError("TOML key is not an integer: " + key);
  return std::get<long>(v.v);
}

long TomlTable::get_int(const std::string& key, long dflt) const {
  return has(key) ? get_int(key) : dflt;
}

double TomlTable::get_double(const std::string& key) const {
  return at(key).as_double();
}

double TomlTable::get_double(const std::string& key, double dflt) const {
  return has(key) ? get_double(key) : dflt;
}

bool TomlTable::get_bool(const std::string& key, bool dflt) const {
  if (!has(key)) return dflt;
  const TomlValue& v = at(key);
  if (!std::holds_alternative<bool>(v.v))
    throw DataError("TOML key is not a boolean: " + key);
  return std::get<bool>(v.v);
}

std::vector<double> TomlTable::get_doubles(const std::string& key) const {
  const TomlValue& v = at(key);
  if (!std::holds_alternative<TomlArray>(v.v))
    throw DataError("TOML key is not an array: " + key);
  std::vector<double> out;
  for (const auto& e : std::get<TomlArray>(v.v)) out.push_back(e.as_double());
  return out;
}

std::vector<std::string> TomlTable::get_strings(const std::string& key) const {
  const TomlValue& v = at(key);
  if (!std::holds_alternative<TomlArray>(v.v))
    throw DataError("TOML key is not an array: " + key);
  std::vector<std::string> out;
  for (const auto& e : std::get<TomlArray>(v.v)) {
    if (!e.is_string()) throw DataError("TOML array element is not a string");
    out.push_back(std::get<std::string>(e.v));
  }
  return out;
}

const TomlTable& TomlTable::table(const std::string& key) const {
  auto it = tables.find(key);
  if (it == tables.end()) throw DataError("missing TOML table: [" + key + "]");
  return it->second;
}

const std::vector<TomlTable>& TomlTable::table_array(
    const std::string& key) const {
  auto it = arrays.find(key);
  if (it == arrays.end())
    throw DataError("missing TOML table array: [[" + key + "]]");
  return it->second;
}

bool TomlTable::has_table(const std::string& key) const {
  return tables.count(key) > 0;
}

bool TomlTable::has_table_array(const std::string& key) const {
  return arrays.count(key) > 0;
}

TomlTable parse_toml(const std::string& text, const std::string& origin) {
  TomlTable root;
  TomlTable* current = &root;
  Parser p{origin, 0};

  std::istringstream in(text);
  std::string raw;
  std::string pending;  // continuation for multiline arrays
  long pending_line = 0;
  std::string pending_key;

  auto finish_pending = [&]() {
    if (pending_key.empty()) return;
    p.line = pending_line;
    current->values[pending_key] = p.parse_value(pending);
    pending_key.clear();
    pending.clear();
  };

  while (std::getline(in, raw)) {
    ++p.line;
    std::string s = strip(strip_comment(raw));
    if (!pending_key.empty()) {
      pending += " " + s;
      // array complete when brackets balance
      long depth = 0;
      bool in_str = false;
      for (char ch : pending) {
        if (ch == '"') in_str = !in_str;
        if (!in_str && ch == '[') ++depth;
        if (!in_str && ch == ']') --depth;
      }
      if (depth == 0) finish_pending();
      continue;
    }
    if (s.empty()) continue;
    if (s.front() == '[') {
      const bool is_array = s.size() > 1 && s[1] == '[';
      const std::string close = is_array ? "]]" : "]";
      if (s.substr(s.size() - close.size()) != close)
        fail(origin, p.line, "unterminated table header");
      const std::string name = strip(
          s.substr(is_array ? 2 : 1, s.size() - 2 * (is_array ? 2 : 1)));
      if (name.empty()) fail(origin, p.line, "empty table name");
      if (name.find('.') != std::string::npos)
        fail(origin, p.line, "dotted table names are not supported");
      if (is_array) {
        root.arrays[name].emplace_back();
        current = &root.arrays[name].back();
      } else {
        current = &root.tables[name];
      }
      continue;
    }
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos) fail(origin, p.line, "expected key = value");
    const std::string key = strip(s.substr(0, eq));
    const std::string value = strip(s.substr(eq + 1));
    if (key.empty()) fail(origin, p.line, "empty key");
    // multiline array start?
    if (!value.empty() && value.front() == '[') {
      long depth = 0;
      bool in_str = false;
      for (char ch : value) {
        if (ch == '"') in_str = !in_str;
        if (!in_str && ch == '[') ++depth;
        if (!in_str && ch == ']') --depth;
      }
      if (depth != 0) {
        pending_key = key;
        pending = value;
        pending_line = p.line;
        continue;
      }
    }
    current->values[key] = p.parse_value(value);
  }
  if (!pending_key.empty()) fail(origin, pending_line, "unterminated array");
  return root;
}

TomlTable parse_toml_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_toml(buf.str(), path);
}

}  // namespace clic::io
