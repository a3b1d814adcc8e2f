#include "aos/kvtext.hpp"

#include "aos/error.hpp"

#include <array>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

namespace aos::kv {

namespace {

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool valid_name(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
                    c == '.' || c == '-';
    if (!ok) return false;
  }
  return true;
}

}  // namespace

const Entry* Section::find(std::string_view key) const {
  const Entry* found = nullptr;
  for (const auto& e : entries) {
    if (e.key == key) found = &e;  // last one wins
  }
  return found;
}

std::vector<const Entry*> Section::find_all(std::string_view key) const {
  std::vector<const Entry*> out;
  for (const auto& e : entries) {
    if (e.key == key) out.push_back(&e);
  }
  return out;
}

void Section::set(std::string key, std::string value) {
  for (auto& e : entries) {
    if (e.key == key) {
      e.value = std::move(value);
      return;
    }
  }
  entries.push_back({std::move(key), std::move(value), 0});
}

void Section::add(std::string key, std::string value) { entries.push_back({std::move(key), std::move(value), 0}); }

Document Document::parse(std::istream& in) {
  Document doc;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(line_no, "unterminated section header");
      const auto name = trim(line.substr(1, line.size() - 2));
      if (!valid_name(name)) throw ParseError(line_no, "invalid section name '" + std::string(name) + "'");
      doc.sections_.push_back({std::string(name), {}, line_no});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'key = value'");
    if (doc.sections_.empty()) throw ParseError(line_no, "entry before any [section]");
    const auto key = trim(line.substr(0, eq));
    if (!valid_name(key)) throw ParseError(line_no, "invalid key '" + std::string(key) + "'");
    doc.sections_.back().entries.push_back({std::string(key), std::string(trim(line.substr(eq + 1))), line_no});
  }
  return doc;
}

Document Document::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse(in);
}

void Document::write(std::ostream& out) const {
  bool first = true;
  for (const auto& s : sections_) {
    if (!first) out << "\n";
    first = false;
    out << "[" << s.name << "]\n";
    for (const auto& e : s.entries) out << e.key << " = " << e.value << "\n";
  }
}

const Section* Document::section(std::string_view name) const {
  for (const auto& s : sections_) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

std::vector<const Section*> Document::sections(std::string_view name) const {
  std::vector<const Section*> out;
  for (const auto& s : sections_) {
    if (s.name == name) out.push_back(&s);
  }
  return out;
}

Section& Document::add_section(std::string name) {
  sections_.push_back({std::move(name), {}, 0});
  return sections_.back();
}

Section& Document::get_or_add(std::string_view name) {
  for (auto& s : sections_) {
    if (s.name == name) return s;
  }
  return add_section(std::string(name));
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::string format_doubles(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ' ';
    out += format_double(values[i]);
  }
  return out;
}

double parse_double(std::string_view text, std::size_t line) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(line, "expected a number, got '" + std::string(text) + "'");
  }
  return v;
}

std::int64_t parse_int(std::string_view text, std::size_t line) {
  text = trim(text);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(line, "expected an integer, got '" + std::string(text) + "'");
  }
  return v;
}

std::uint64_t parse_u64(std::string_view text, std::size_t line) {
  text = trim(text);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(line, "expected an unsigned integer, got '" + std::string(text) + "'");
  }
  return v;
}

bool parse_bool(std::string_view text, std::size_t line) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ParseError(line, "expected true/false, got '" + std::string(text) + "'");
}

std::vector<double> parse_doubles(std::string_view text, std::size_t line, std::size_t expected) {
  std::vector<double> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == ',')) ++i;
    std::size_t j = i;
    while (j < text.size() && !(text[j] == ' ' || text[j] == '\t' || text[j] == ',')) ++j;
    if (j > i) out.push_back(parse_double(text.substr(i, j - i), line));
    i = j;
  }
  if (expected && out.size() != expected) {
    throw ParseError(line, "expected " + std::to_string(expected) + " numbers, got " + std::to_string(out.size()));
  }
  return out;
}

}  // namespace aos::kv
