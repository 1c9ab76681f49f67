#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace delaynet::csv {

// Splits one line on `delim`, honouring double quotes ("" escapes a quote).
std::vector<std::string> split_line(std::string_view line, char delim = ',');

// Quotes a field when it contains the delimiter, a quote or a newline.
std::string escape(std::string_view field, char delim = ',');

void write_row(std::ostream& out, std::vector<std::string> const& fields,
               char delim = ',');

// Reads lines, skipping '#' manifest/comment lines and blank lines.
// Tracks the 1-based physical line number of the last line returned.
class line_reader {
public:
  explicit line_reader(std::istream& in) : in_{in} {}

  bool next(std::string& line);
  std::size_t line_number() const { return line_no_; }

private:
  std::istream& in_;
  std::size_t line_no_{0};
};

// Column lookup by (normalised) header name.
class header_index {
public:
  header_index() = default;
  explicit header_index(std::vector<std::string> names);

  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t require(std::string_view name) const;  // throws format_error
  std::size_t size() const { return names_.size(); }
  std::vector<std::string> const& names() const { return names_; }

private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace delaynet::csv
