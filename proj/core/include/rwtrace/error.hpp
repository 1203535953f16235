#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rwtrace {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input row. `line` is 1-based; `field` names the offending column.
class ParseError : public Error {
 public:
  ParseError(std::string source, std::size_t line, std::string field, const std::string& what);

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::string source_;
  std::size_t line_;
  std::string field_;
};

// Lookup of an address, txid or date that the loaded data does not contain.
class NotFound : public Error {
 public:
  using Error::Error;
};

}  // namespace rwtrace
