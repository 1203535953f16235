#include "rwtrace/csv.hpp"

#include <charconv>
#include <istream>
#include <ostream>

#include <fmt/core.h>

#include "rwtrace/error.hpp"

namespace rwtrace {

ParseError::ParseError(std::string source, std::size_t line, std::string field, const std::string& what)
    : Error(fmt::format("{}:{}: field '{}': {}", source, line, field, what)),
      source_(std::move(source)),
      line_(line),
      field_(std::move(field)) {}

namespace csv {

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

Reader::Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    header_ = split_line(line);
    for (std::size_t i = 0; i < header_.size(); ++i) index_.emplace(header_[i], i);
    return;
  }
}

bool Reader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    row_ = split_line(line);
    if (row_.size() != header_.size()) {
      throw ParseError(source_, line_, "*",
                       fmt::format("expected {} columns, found {}", header_.size(), row_.size()));
    }
    return true;
  }
  return false;
}

bool Reader::has_column(std::string_view name) const { return index_.count(std::string(name)) != 0; }

const std::string& Reader::at(std::string_view column) const {
  auto it = index_.find(std::string(column));
  if (it == index_.end()) throw ParseError(source_, line_, std::string(column), "missing column");
  return row_[it->second];
}

std::optional<std::string> Reader::get(std::string_view column) const {
  auto it = index_.find(std::string(column));
  if (it == index_.end()) return std::nullopt;
  return row_[it->second];
}

namespace {

template <typename T>
T parse_number(const std::string& text, const Reader& r, std::string_view column) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ParseError(r.source(), r.line(), std::string(column), fmt::format("not a number: '{}'", text));
  }
  return value;
}

}  // namespace

long long Reader::as_int(std::string_view column) const { return parse_number<long long>(at(column), *this, column); }

unsigned long long Reader::as_uint(std::string_view column) const {
  return parse_number<unsigned long long>(at(column), *this, column);
}

double Reader::as_double(std::string_view column) const {
  const std::string& text = at(column);
  try {
    std::size_t used = 0;
    double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ParseError(source_, line_, std::string(column), fmt::format("not a number: '{}'", text));
  }
}

Writer& Writer::row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    out_ << escape(fields[i]);
  }
  out_ << '\n';
  return *this;
}

}  // namespace csv
}  // namespace rwtrace
