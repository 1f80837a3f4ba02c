#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cfad::tomlmini {

// Minimal TOML-style table: named sections of scalar key/value pairs.
// Supported values: integers, reals, booleans, double-quoted strings.
// Comments start with '#'. Nested tables, arrays and dates are out of scope;
// config and metadata files only ever hold flat scalars.
class Table {
 public:
  static Table parse(std::string_view text);
  static Table parse_file(const std::filesystem::path& path);

  bool has(std::string_view section, std::string_view key) const;

  std::int64_t get_int(std::string_view section, std::string_view key) const;
  double get_real(std::string_view section, std::string_view key) const;
  bool get_bool(std::string_view section, std::string_view key) const;
  std::string get_text(std::string_view section, std::string_view key) const;

  std::int64_t get_int(std::string_view section, std::string_view key,
                       std::int64_t fallback) const;
  double get_real(std::string_view section, std::string_view key,
                  double fallback) const;
  bool get_bool(std::string_view section, std::string_view key,
                bool fallback) const;
  std::string get_text(std::string_view section, std::string_view key,
                       std::string_view fallback) const;

  void set_int(std::string_view section, std::string_view key,
               std::int64_t value);
  void set_real(std::string_view section, std::string_view key, double value);
  void set_bool(std::string_view section, std::string_view key, bool value);
  void set_text(std::string_view section, std::string_view key,
                std::string_view value);

  // Keys of one section in insertion order; empty if the section is absent.
  std::vector<std::string> keys(std::string_view section) const;

  // Round-trippable text form, sections and keys in insertion order.
  std::string serialize() const;

 private:
  struct Entry {
    std::string key;
    std::string raw;  // value as written (numbers/bools verbatim, strings
                      // stored unquoted)
    bool quoted = false;
  };
  struct Section {
    std::string name;
    std::vector<Entry> entries;
  };

  const Entry* find(std::string_view section, std::string_view key) const;
  Entry& upsert(std::string_view section, std::string_view key);

  std::vector<Section> sections_;
};

}  // namespace cfad::tomlmini
