#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace ospline {

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double v);

/// Column-named table parsed from a comma-separated file with a header row.
class DataTable {
 public:
  static DataTable parse(std::istream& in, const std::string& source_name = "<input>");
  static DataTable read_file(const std::string& path);

  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t rows() const { return cells_.size(); }
  bool has_column(std::string_view name) const;

  /// Numeric column; throws DataError naming the row and column on any
  /// missing or non-numeric cell.
  std::vector<double> numeric(std::string_view name) const;
  /// Raw text column; empty cells are a DataError.
  std::vector<std::string> text(std::string_view name) const;

 private:
  std::size_t index_of(std::string_view name) const;

  std::string source_;
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> cells_;
};

/// Splits one CSV record on commas (no quoting support beyond trimming
/// surrounding double quotes from a field).
std::vector<std::string> split_csv_line(std::string_view line);

/// Plain "key = value" text with '#' comments.
std::map<std::string, std::string> read_key_values(std::istream& in, const std::string& source_name);

/// 64-bit FNV-1a, used to fingerprint configs in manifests.
std::uint64_t fnv1a64(std::string_view data);

}  // namespace ospline
