#include <string>

#include "ctm/error.hpp"
#include "ctm/io.hpp"

namespace ctm {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::map<std::string, std::string> parse_key_values(std::string_view text) {
  std::map<std::string, std::string> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw Error("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw Error("config line " + std::to_string(line_no) + ": empty key");
    if (!out.emplace(key, std::string(trim(line.substr(eq + 1)))).second) {
      throw Error("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
  }
  return out;
}

}  // namespace ctm

#include <charconv>

namespace ctm {

namespace {

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expected) {
  throw Error("config key '" + std::string(key) + "': expected " + expected + ", got '" + std::string(value) + "'");
}

}  // namespace

double parse_double(std::string_view value, std::string_view key) {
  const auto v = trim(value);
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size()) bad_value(key, value, "a number");
  return out;
}

long long parse_integer(std::string_view value, std::string_view key) {
  const auto v = trim(value);
  long long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size()) bad_value(key, value, "an integer");
  return out;
}

bool parse_bool(std::string_view value, std::string_view key) {
  const auto v = trim(value);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, value, "true/false");
}

std::vector<double> parse_doubles(std::string_view value, std::string_view key) {
  std::vector<double> out;
  std::size_t i = 0;
  auto sep = [](char c) { return c == ',' || c == ' ' || c == '\t'; };
  while (i < value.size()) {
    while (i < value.size() && sep(value[i])) ++i;
    std::size_t j = i;
    while (j < value.size() && !sep(value[j])) ++j;
    if (j > i) out.push_back(parse_double(value.substr(i, j - i), key));
    i = j;
  }
  if (out.empty()) bad_value(key, value, "a list of numbers");
  return out;
}

Vec3 parse_vec3(std::string_view value, std::string_view key) {
  const auto v = parse_doubles(value, key);
  if (v.size() != 3) bad_value(key, value, "three numbers");
  return {v[0], v[1], v[2]};
}

}  // namespace ctm
