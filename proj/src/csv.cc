#include "delaynet/csv.h"

#include <fmt/core.h>

#include "delaynet/common.h"

namespace delaynet::csv {

std::vector<std::string> split_line(std::string_view line, char delim) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    auto const c = line[i];
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
    } else if (c == delim) {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string escape(std::string_view field, char delim) {
  if (field.find_first_of(std::string{delim, '"', '\n', '\r'}) ==
      std::string_view::npos) {
    return std::string{field};
  }
  std::string out{"\""};
  for (auto const c : field) {
    if (c == '"') {
      out.push_back('"');
    }
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, std::vector<std::string> const& fields,
               char delim) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i != 0) {
      out << delim;
    }
    out << escape(fields[i], delim);
  }
  out << '\n';
}

bool line_reader::next(std::string& line) {
  while (std::getline(in_, line)) {
    ++line_no_;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty() || line.front() == '#') {
      continue;
    }
    return true;
  }
  return false;
}

header_index::header_index(std::vector<std::string> names)
    : names_{std::move(names)} {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    index_.emplace(to_lower(trim(names_[i])), i);
  }
}

std::optional<std::size_t> header_index::find(std::string_view name) const {
  auto const it = index_.find(to_lower(name));
  if (it == end(index_)) {
    return std::nullopt;
  }
  return it->second;
}

std::size_t header_index::require(std::string_view name) const {
  if (auto const i = find(name)) {
    return *i;
  }
  throw format_error(fmt::format("missing required column \"{}\"", name));
}

}  // namespace delaynet::csv
