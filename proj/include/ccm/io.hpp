#pragma once

#include "ccm/types.hpp"

#include <string>
#include <vector>

namespace ccm {

/// 17 significant digits: enough for exact double round-trips, so files
/// written from identical state are byte-identical.
std::string format_double(double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/// Ordered key/value file with optional [section] headers; keys are
/// flattened to "section.key". Parse errors carry line numbers.
struct KvFile {
  std::vector<std::pair<std::string, std::string>> entries;

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double_or(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key) const;
  std::int64_t get_int_or(const std::string& key, std::int64_t fallback) const;
  bool get_bool_or(const std::string& key, bool fallback) const;
  std::vector<double> get_array(const std::string& key) const;
};

KvFile parse_kv_text(const std::string& text);
KvFile parse_kv_file(const std::string& path);

double parse_double(const std::string& s);
std::vector<double> parse_number_array(const std::string& s);
std::vector<std::vector<double>> parse_nested_array(const std::string& s);

std::string format_array(const std::vector<double>& values);
std::string format_array(const Vector& values);
std::string format_int_array(const std::vector<int>& values);

/// One CSV row of doubles at 17 significant digits.
std::string csv_row(const std::vector<double>& values);

}  // namespace ccm
