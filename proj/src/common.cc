#include "delaynet/common.h"
#include "delaynet/month.h"

#include <cctype>
#include <charconv>
#include <cmath>

#include <fmt/core.h>

namespace delaynet {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(mix64(master) ^ (index * 0xd1342543de82ef95ULL + 1));
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
  for (auto const c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) { return fmt::format("{:016x}", v); }

std::string format_double(double v) {
  if (std::isnan(v)) {
    return "nan";
  }
  char buf[64];
  auto const res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) {
    return std::nullopt;
  }
  if (s.front() == '+') {
    s.remove_prefix(1);
  }
  double v{};
  auto const res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    return std::nullopt;
  }
  return v;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  s = trim(s);
  if (s.empty()) {
    return std::nullopt;
  }
  if (s.front() == '+') {
    s.remove_prefix(1);
  }
  std::int64_t v{};
  auto const res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    return std::nullopt;
  }
  return v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

std::string to_lower(std::string_view s) {
  std::string out{s};
  for (auto& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::vector<std::string> split(std::string_view s, char delim) {
  std::vector<std::string> out;
  if (s.empty()) {
    return out;
  }
  std::size_t start = 0;
  while (true) {
    auto const pos = s.find(delim, start);
    out.emplace_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) {
      break;
    }
    start = pos + 1;
  }
  return out;
}

std::string month_key::str() const {
  return fmt::format("{:04}-{:02}", year, month);
}

month_key month_key::parse(std::string_view s) {
  s = trim(s);
  auto const dash = s.find('-');
  if (dash == std::string_view::npos) {
    throw std::invalid_argument(fmt::format("bad month \"{}\"", s));
  }
  auto const y = parse_int(s.substr(0, dash));
  auto const m = parse_int(s.substr(dash + 1));
  if (!y || !m || *m < 1 || *m > 12) {
    throw std::invalid_argument(fmt::format("bad month \"{}\"", s));
  }
  return {static_cast<int>(*y), static_cast<int>(*m)};
}

}  // namespace delaynet
