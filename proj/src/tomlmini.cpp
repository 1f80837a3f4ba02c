#include "cfad/tomlmini.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cfad::tomlmini {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

// Strips a trailing comment, respecting quoted strings.
std::string_view strip_comment(std::string_view s) {
  bool in_quote = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') in_quote = !in_quote;
    if (s[i] == '#' && !in_quote) return s.substr(0, i);
  }
  return s;
}

[[noreturn]] void fail(std::string_view section, std::string_view key,
                       std::string_view what) {
  std::ostringstream os;
  os << "config key [" << section << "]." << key << ": " << what;
  throw std::runtime_error(os.str());
}

}  // namespace

Table Table::parse(std::string_view text) {
  Table t;
  std::string current;  // top-level keys live under the "" section
  std::size_t pos = 0;
  int lineno = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(
        pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++lineno;

    line = trim(strip_comment(line));
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw std::runtime_error("malformed section header at line " +
                                 std::to_string(lineno));
      }
      current = std::string(trim(line.substr(1, line.size() - 2)));
      t.upsert(current, {});  // creates the section even if it stays empty
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw std::runtime_error("expected key = value at line " +
                               std::to_string(lineno));
    }
    const std::string_view key = trim(line.substr(0, eq));
    std::string_view value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw std::runtime_error("empty key or value at line " +
                               std::to_string(lineno));
    }
    Entry& e = t.upsert(current, key);
    if (value.front() == '"') {
      if (value.size() < 2 || value.back() != '"') {
        throw std::runtime_error("unterminated string at line " +
                                 std::to_string(lineno));
      }
      e.raw = std::string(value.substr(1, value.size() - 2));
      e.quoted = true;
    } else {
      e.raw = std::string(value);
      e.quoted = false;
    }
  }
  return t;
}

Table Table::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

const Table::Entry* Table::find(std::string_view section,
                                std::string_view key) const {
  for (const Section& s : sections_) {
    if (s.name != section) continue;
    for (const Entry& e : s.entries) {
      if (e.key == key) return &e;
    }
  }
  return nullptr;
}

Table::Entry& Table::upsert(std::string_view section, std::string_view key) {
  Section* target = nullptr;
  for (Section& s : sections_) {
    if (s.name == section) {
      target = &s;
      break;
    }
  }
  if (target == nullptr) {
    sections_.push_back(Section{std::string(section), {}});
    target = &sections_.back();
  }
  if (key.empty()) {
    // Section-creation call from the parser; hand back a scratch entry that
    // is not stored.
    static Entry scratch;
    scratch = Entry{};
    return scratch;
  }
  for (Entry& e : target->entries) {
    if (e.key == key) return e;
  }
  target->entries.push_back(Entry{std::string(key), "", false});
  return target->entries.back();
}

bool Table::has(std::string_view section, std::string_view key) const {
  return find(section, key) != nullptr;
}

std::int64_t Table::get_int(std::string_view section,
                            std::string_view key) const {
  const Entry* e = find(section, key);
  if (e == nullptr) fail(section, key, "missing");
  if (e->quoted) fail(section, key, "expected an integer, found a string");
  std::int64_t out = 0;
  const char* first = e->raw.data();
  const char* last = first + e->raw.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) {
    fail(section, key, "not an integer: " + e->raw);
  }
  return out;
}

double Table::get_real(std::string_view section, std::string_view key) const {
  const Entry* e = find(section, key);
  if (e == nullptr) fail(section, key, "missing");
  if (e->quoted) fail(section, key, "expected a number, found a string");
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(e->raw, &used);
  } catch (const std::exception&) {
    fail(section, key, "not a number: " + e->raw);
  }
  if (used != e->raw.size()) fail(section, key, "not a number: " + e->raw);
  return out;
}

bool Table::get_bool(std::string_view section, std::string_view key) const {
  const Entry* e = find(section, key);
  if (e == nullptr) fail(section, key, "missing");
  if (e->raw == "true") return true;
  if (e->raw == "false") return false;
  fail(section, key, "not a boolean: " + e->raw);
}

std::string Table::get_text(std::string_view section,
                            std::string_view key) const {
  const Entry* e = find(section, key);
  if (e == nullptr) fail(section, key, "missing");
  return e->raw;
}

std::int64_t Table::get_int(std::string_view section, std::string_view key,
                            std::int64_t fallback) const {
  return has(section, key) ? get_int(section, key) : fallback;
}

double Table::get_real(std::string_view section, std::string_view key,
                       double fallback) const {
  return has(section, key) ? get_real(section, key) : fallback;
}

bool Table::get_bool(std::string_view section, std::string_view key,
                     bool fallback) const {
  return has(section, key) ? get_bool(section, key) : fallback;
}

std::string Table::get_text(std::string_view section, std::string_view key,
                            std::string_view fallback) const {
  return has(section, key) ? get_text(section, key) : std::string(fallback);
}

void Table::set_int(std::string_view section, std::string_view key,
                    std::int64_t value) {
  Entry& e = upsert(section, key);
  e.raw = std::to_string(value);
  e.quoted = false;
}

void Table::set_real(std::string_view section, std::string_view key,
                     double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  Entry& e = upsert(section, key);
  e.raw = buf;
  e.quoted = false;
}

void Table::set_bool(std::string_view section, std::string_view key,
                     bool value) {
  Entry& e = upsert(section, key);
  e.raw = value ? "true" : "false";
  e.quoted = false;
}

void Table::set_text(std::string_view section, std::string_view key,
                     std::string_view value) {
  Entry& e = upsert(section, key);
  e.raw = std::string(value);
  e.quoted = true;
}

std::vector<std::string> Table::keys(std::string_view section) const {
  std::vector<std::string> out;
  for (const Section& s : sections_) {
    if (s.name != section) continue;
    for (const Entry& e : s.entries) out.push_back(e.key);
  }
  return out;
}

std::string Table::serialize() const {
  std::ostringstream os;
  bool first = true;
  for (const Section& s : sections_) {
    if (!first) os << '\n';
    first = false;
    if (!s.name.empty()) os << '[' << s.name << "]\n";
    for (const Entry& e : s.entries) {
      os << e.key << " = ";
      if (e.quoted) {
        os << '"' << e.raw << '"';
      } else {
        os << e.raw;
      }
      os << '\n';
    }
  }
  return os.str();
}

}  // namespace cfad::tomlmini
