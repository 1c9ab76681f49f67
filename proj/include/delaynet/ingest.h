#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "delaynet/month.h"

namespace delaynet {

struct calendar_date {
  int year{1970};
  int month{1};
  int day{1};

  friend constexpr auto operator<=>(calendar_date const&,
                                    calendar_date const&) = default;
  month_key month_of() const { return {year, month}; }
};

// Local wall-clock time in minutes since 1970-01-01. Only ordering and the
// calendar month are consumed, so time zones are ignored.
using wall_minutes = std::int64_t;

// One row of the rail service archive: a stop of a service at a station.
struct stop_record {
  std::string service_id;
  calendar_date date;
  std::string service_type;
  std::string company;
  bool completely_cancelled{false};
  bool partly_cancelled{false};
  std::string station_name;
  std::optional<wall_minutes> arrival_time;
  std::optional<double> arrival_delay_min;
  std::optional<bool> arrival_cancelled;
  std::optional<wall_minutes> departure_time;
  std::optional<double> departure_delay_min;
  std::optional<bool> departure_cancelled;
  std::size_t line{0};  // physical line in the source file
};

// A service reduced to its end-to-end ride.
struct service_trajectory {
  std::string service_id;
  month_key month;
  std::string source_station;
  std::string target_station;
  int final_arrival_delay_min{0};  // -1: unfinished
  bool final_arrival_cancelled{false};
  bool completely_cancelled{false};
  bool had_intermediate_delay{false};

  friend bool operator==(service_trajectory const&,
                         service_trajectory const&) = default;
};

inline constexpr int unfinished_delay = -1;

struct flight_record {
  int year{0};
  int month{1};
  std::string source;
  std::string target;
  std::int64_t passengers{0};
  std::int64_t weight{0};  // departures performed
};

struct record_error {
  std::size_t line;
  std::string message;
};

struct parse_options {
  std::optional<std::size_t> row_limit;
  std::size_t max_record_errors{1000};
};

struct parse_report {
  std::size_t rows_read{0};
  std::size_t records{0};
  std::vector<record_error> errors;
};

// Streams the rail archive. Empty or "NaN" cells become absent values.
// Malformed rows are collected in the report; exceeding
// `max_record_errors`, or a missing required column, throws format_error.
parse_report read_service_archive(
    std::istream& in, parse_options const& opt,
    std::function<void(stop_record&&)> const& sink);

struct service_archive {
  std::vector<stop_record> records;
  parse_report report;
};

service_archive parse_service_archive(std::filesystem::path const& path,
                                      parse_options const& opt = {});
service_archive parse_service_archive(std::istream& in,
                                      parse_options const& opt = {});

struct service_filter {
  std::string company{"NS"};
  // When non-empty, only these service types are kept (case-insensitive).
  std::vector<std::string> type_allowlist;
  // Otherwise types containing any of these substrings are dropped.
  std::vector<std::string> excluded_type_patterns{"bus", "taxi", "stopbus",
                                                  "snelbus"};

  bool keeps_type(std::string_view service_type) const;
};

struct clean_report {
  std::size_t kept{0};
  std::size_t dropped_company{0};
  std::size_t dropped_type{0};
};

std::vector<stop_record> clean_services(std::vector<stop_record> records,
                                        service_filter const& filter = {},
                                        clean_report* report = nullptr);

struct extract_report {
  std::size_t services{0};
  std::size_t trajectories{0};
  std::size_t skipped_too_few_stops{0};
  std::size_t skipped_no_endpoints{0};
  std::size_t skipped_same_station{0};
};

// Groups stops by service (first-appearance order), orders each service's
// stops by planned time (departure, else arrival; ties keep file order) and
// reduces it to source/target with the final-arrival-delay flag.
std::vector<service_trajectory> extract_trajectories(
    std::vector<stop_record> const& records, extract_report* report = nullptr);

void write_trajectories(std::ostream& out,
                        std::vector<service_trajectory> const& trajectories);
std::vector<service_trajectory> read_trajectories(std::istream& in);

// Flight table: YEAR, MONTH, Source, Target, Passengers, Weight.
std::vector<flight_record> parse_flights(std::istream& in,
                                         parse_options const& opt = {},
                                         parse_report* report = nullptr);

struct flight_clean_report {
  std::size_t kept{0};
  std::size_t dropped_self_loop{0};
  std::size_t dropped_zero_weight{0};
};

std::vector<flight_record> clean_flights(std::vector<flight_record> records,
                                         flight_clean_report* report = nullptr);

void write_flights(std::ostream& out, std::vector<flight_record> const& rows);

}  // namespace delaynet
