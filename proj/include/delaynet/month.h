#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace delaynet {

// Calendar month; the only temporal granularity the pipeline consumes.
struct month_key {
  int year{1970};
  int month{1};  // 1..12

  friend constexpr auto operator<=>(month_key const&,
                                    month_key const&) = default;

  constexpr month_key successor() const {
    return month == 12 ? month_key{year + 1, 1} : month_key{year, month + 1};
  }

  constexpr int ordinal() const { return year * 12 + (month - 1); }

  // "YYYY-MM"
  std::string str() const;

  // Accepts "YYYY-MM" (and "YYYY-M"). Throws std::invalid_argument.
  static month_key parse(std::string_view s);
};

}  // namespace delaynet
