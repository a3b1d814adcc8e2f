#pragma once

// Sectioned key-value text used for scene dumps and scenario configs.
//
//   # comment
//   [section]
//   key = value
//   key = value      <- keys may repeat (lists)
//
// Keys and section names are [A-Za-z0-9_.-]+; values run to end of line with
// surrounding whitespace trimmed. Numbers are written in shortest round-trip
// form, so parse(write(doc)) reproduces every double bit-exactly.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aos::kv {

struct Entry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

struct Section {
  std::string name;
  std::vector<Entry> entries;
  std::size_t line = 0;

  const Entry* find(std::string_view key) const;
  std::vector<const Entry*> find_all(std::string_view key) const;
  void set(std::string key, std::string value);
  void add(std::string key, std::string value);
};

class Document {
 public:
  static Document parse(std::istream& in);
  static Document parse(std::string_view text);
  void write(std::ostream& out) const;

  const Section* section(std::string_view name) const;
  std::vector<const Section*> sections(std::string_view name) const;
  Section& add_section(std::string name);
  Section& get_or_add(std::string_view name);
  const std::vector<Section>& all() const { return sections_; }

 private:
  std::vector<Section> sections_;
};

std::string format_double(double v);
std::string format_doubles(const std::vector<double>& values);

/// Throws ParseError carrying `line` on malformed input.
double parse_double(std::string_view text, std::size_t line);
std::int64_t parse_int(std::string_view text, std::size_t line);
std::uint64_t parse_u64(std::string_view text, std::size_t line);
bool parse_bool(std::string_view text, std::size_t line);
std::vector<double> parse_doubles(std::string_view text, std::size_t line, std::size_t expected = 0);

}  // namespace aos::kv
