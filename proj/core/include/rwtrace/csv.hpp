#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace rwtrace::csv {

// Splits one RFC 4180 record. Quoted fields may contain commas and doubled quotes;
// embedded newlines are not supported.
std::vector<std::string> split_line(std::string_view line);

std::string escape(std::string_view field);

// Header-driven reader. Blank lines are skipped; line numbers stay 1-based and
// count every physical line including the header.
class Reader {
 public:
  Reader(std::istream& in, std::string source);

  bool next();

  const std::vector<std::string>& header() const noexcept { return header_; }
  bool has_column(std::string_view name) const;
  std::size_t line() const noexcept { return line_; }
  const std::string& source() const noexcept { return source_; }

  // Throws ParseError when the column is missing from the header.
  const std::string& at(std::string_view column) const;
  std::optional<std::string> get(std::string_view column) const;

  // Numeric accessors throw ParseError naming the line and column.
  long long as_int(std::string_view column) const;
  unsigned long long as_uint(std::string_view column) const;
  double as_double(std::string_view column) const;

 private:
  std::istream& in_;
  std::string source_;
  std::vector<std::string> header_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> row_;
  std::size_t line_ = 0;
};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  Writer& row(const std::vector<std::string>& fields);

 private:
  std::ostream& out_;
};

}  // namespace rwtrace::csv
