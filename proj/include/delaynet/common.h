#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace delaynet {

// Malformed input that cannot be recovered from (bad header, too many bad rows).
struct format_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input that is well-formed but violates a data contract (e.g. one class only).
struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// splitmix64 finaliser; stable across platforms and releases.
std::uint64_t mix64(std::uint64_t x);

// Child seed for task `index` of a run seeded with `master`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// FNV-1a, used for config and input digests in run manifests.
std::uint64_t fnv1a(std::string_view bytes,
                    std::uint64_t h = 14695981039346656037ULL);

std::string hex64(std::uint64_t v);

// Shortest representation that parses back to the same double.
std::string format_double(double v);

std::optional<double> parse_double(std::string_view s);
std::optional<std::int64_t> parse_int(std::string_view s);

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string> split(std::string_view s, char delim);

}  // namespace delaynet
