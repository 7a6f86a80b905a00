#include "ccm/io.hpp"

#include "ccm/errors.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace ccm {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInputError("cannot open file: " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInputError("cannot write file: " + path);
  out << content;
  if (!out) throw InvalidInputError("write failed: " + path);
}

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

bool KvFile::has(const std::string& key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return true;
  }
  return false;
}

const std::string& KvFile::get(const std::string& key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return v;
  }
  throw InvalidInputError("missing key: " + key);
}

std::string KvFile::get_or(const std::string& key,
                           const std::string& fallback) const {
  return has(key) ? get(key) : fallback;
}

double KvFile::get_double(const std::string& key) const {
  return parse_double(get(key));
}

double KvFile::get_double_or(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::int64_t KvFile::get_int(const std::string& key) const {
  const double v = get_double(key);
  const auto n = static_cast<std::int64_t>(v);
  if (static_cast<double>(n) != v) {
    throw InvalidInputError("expected integer for key: " + key);
  }
  return n;
}

std::int64_t KvFile::get_int_or(const std::string& key,
                                std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

bool KvFile::get_bool_or(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string& v = get(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw InvalidInputError("expected true/false for key: " + key);
}

std::vector<double> KvFile::get_array(const std::string& key) const {
  return parse_number_array(get(key));
}

KvFile parse_kv_text(const std::string& text) {
  KvFile kv;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']') {
        throw InvalidInputError("line " + std::to_string(lineno) +
                                ": unterminated section header");
      }
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw InvalidInputError("line " + std::to_string(lineno) +
                              ": expected 'key = value'");
    }
    std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) {
      throw InvalidInputError("line " + std::to_string(lineno) + ": empty key");
    }
    if (!section.empty()) key = section + "." + key;
    kv.entries.emplace_back(std::move(key), value);
  }
  return kv;
}

KvFile parse_kv_file(const std::string& path) {
  return parse_kv_text(read_text_file(path));
}

double parse_double(const std::string& s) {
  const std::string t = trim(s);
  if (t.empty()) throw InvalidInputError("expected a number, got empty text");
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size()) {
    throw InvalidInputError("malformed number: " + t);
  }
  return v;
}

std::vector<double> parse_number_array(const std::string& s) {
  const std::string t = trim(s);
  if (t.size() < 2 || t.front() != '[' || t.back() != ']') {
    throw InvalidInputError("expected a bracketed array, got: " + t);
  }
  std::vector<double> out;
  std::string body = t.substr(1, t.size() - 2);
  std::istringstream in(body);
  std::string item;
  while (std::getline(in, item, ',')) {
    const std::string it = trim(item);
    if (it.empty()) {
      if (out.empty() && trim(body).empty()) break;  // "[]"
      throw InvalidInputError("malformed array: " + t);
    }
    out.push_back(parse_double(it));
  }
  return out;
}

std::vector<std::vector<double>> parse_nested_array(const std::string& s) {
  const std::string t = trim(s);
  if (t.size() < 2 || t.front() != '[' || t.back() != ']') {
    throw InvalidInputError("expected a nested array, got: " + t);
  }
  std::vector<std::vector<double>> out;
  std::size_t i = 1;
  const std::size_t end = t.size() - 1;
  while (i < end) {
    while (i < end && (t[i] == ' ' || t[i] == ',' || t[i] == '\t')) ++i;
    if (i >= end) break;
    if (t[i] != '[') throw InvalidInputError("malformed nested array: " + t);
    const std::size_t close = t.find(']', i);
    if (close == std::string::npos || close > end) {
      throw InvalidInputError("malformed nested array: " + t);
    }
    out.push_back(parse_number_array(t.substr(i, close - i + 1)));
    i = close + 1;
  }
  return out;
}

std::string format_array(const std::vector<double>& values) {
  std::string out = "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += format_double(values[i]);
  }
  out += "]";
  return out;
}

std::string format_array(const Vector& values) {
  return format_array(
      std::vector<double>(values.data(), values.data() + values.size()));
}

std::string format_int_array(const std::vector<int>& values) {
  std::string out = "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(values[i]);
  }
  out += "]";
  return out;
}

std::string csv_row(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += format_double(values[i]);
  }
  out += "\n";
  return out;
}

}  // namespace ccm
