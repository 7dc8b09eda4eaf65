#include "welfarecast/csv.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "welfarecast/error.hpp"

namespace welfarecast::csv {

std::optional<std::size_t> Document::find_column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  return std::nullopt;
}

std::size_t Document::column(std::string_view name) const {
  if (auto idx = find_column(name)) return *idx;
  fail(ErrorKind::Schema, source.string() + ": missing column '" + std::string(name) + "'");
}

void Document::require_prefix(const std::vector<std::string_view>& names) const {
  if (header.size() < names.size())
    fail(ErrorKind::Schema, source.string() + ": header has too few columns");
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (header[i] != names[i])
      fail(ErrorKind::Schema, source.string() + ": expected column " + std::to_string(i + 1) + " '" +
                                  std::string(names[i]) + "', found '" + header[i] + "'");
  }
}

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

Document parse(std::string_view text, const std::filesystem::path& source) {
  Document doc;
  doc.source = source;
  // Strip a UTF-8 byte order mark.
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

  bool have_header = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!have_header) {
      doc.header = split_line(line);
      have_header = true;
    } else {
      doc.rows.push_back(split_line(line));
    }
  }
  if (!have_header) fail(ErrorKind::Schema, source.string() + ": missing header row");
  return doc;
}

Document read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path);
}

std::string format_real(double value) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

std::string format_optional(const std::optional<double>& value) {
  return value ? format_real(*value) : std::string{};
}

double parse_real(std::string_view field, std::string_view context) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (field.empty() || ec != std::errc{} || ptr != last)
    fail(ErrorKind::Value, std::string(context) + ": not a number '" + std::string(field) + "'");
  return value;
}

long long parse_int(std::string_view field, std::string_view context) {
  long long value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size())
    fail(ErrorKind::Value, std::string(context) + ": not an integer '" + std::string(field) + "'");
  return value;
}

Writer::Writer(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
  if (!out_) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
}

void Writer::row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_.put(',');
    const std::string& f = fields[i];
    if (f.find_first_of(",\"\n") != std::string::npos) {
      out_.put('"');
      for (char c : f) {
        if (c == '"') out_.put('"');
        out_.put(c);
      }
      out_.put('"');
    } else {
      out_ << f;
    }
  }
  out_.put('\n');
  if (!out_) fail(ErrorKind::Io, "write failed on '" + path_.string() + "'");
}

void Writer::close() {
  out_.close();
  if (out_.fail()) fail(ErrorKind::Io, "close failed on '" + path_.string() + "'");
}

}  // namespace welfarecast::csv
