#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace welfarecast::csv {

// Whole-file CSV: UTF-8, comma separator, mandatory header row. Fields may be
// double-quoted; an empty field means "missing".
struct Document {
  std::filesystem::path source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> find_column(std::string_view name) const;
  // Throws SchemaError naming the file when the column is absent.
  std::size_t column(std::string_view name) const;
  // Throws SchemaError unless the header begins with exactly these names.
  void require_prefix(const std::vector<std::string_view>& names) const;
};

Document read(const std::filesystem::path& path);
Document parse(std::string_view text, const std::filesystem::path& source = {});

std::vector<std::string> split_line(std::string_view line);

// Reals are printed with 17 significant digits, which round-trips every double.
std::string format_real(double value);
std::string format_optional(const std::optional<double>& value);

// Strict numeric parsing; context names the file/row for the error message.
double parse_real(std::string_view field, std::string_view context);
long long parse_int(std::string_view field, std::string_view context);

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path);

  void row(const std::vector<std::string>& fields);
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

}  // namespace welfarecast::csv
