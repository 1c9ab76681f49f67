#include "delaynet/ingest.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include <fmt/core.h>

#include "delaynet/common.h"
#include "delaynet/csv.h"

namespace delaynet {

namespace {

struct bad_cell : std::runtime_error {
  using std::runtime_error::runtime_error;
};

bool is_absent(std::string_view s) {
  s = trim(s);
  return s.empty() || to_lower(s) == "nan" || to_lower(s) == "null";
}

std::optional<bool> parse_flag(std::string_view s, std::string_view column) {
  if (is_absent(s)) {
    return std::nullopt;
  }
  auto const v = to_lower(trim(s));
  if (v == "true" || v == "1" || v == "1.0" || v == "yes") {
    return true;
  }
  if (v == "false" || v == "0" || v == "0.0" || v == "no") {
    return false;
  }
  throw bad_cell(fmt::format("{}: not a boolean: \"{}\"", column, s));
}

std::optional<double> parse_delay(std::string_view s, std::string_view column,
                                  bool non_negative) {
  if (is_absent(s)) {
    return std::nullopt;
  }
  auto const v = parse_double(s);
  if (!v || !std::isfinite(*v)) {
    throw bad_cell(fmt::format("{}: not a number: \"{}\"", column, s));
  }
  if (non_negative && *v < 0) {
    throw bad_cell(fmt::format("{}: negative delay {}", column, *v));
  }
  return v;
}

calendar_date parse_date(std::string_view s) {
  s = trim(s);
  auto const parts = split(s.substr(0, std::min<std::size_t>(s.size(), 10)), '-');
  if (parts.size() == 3) {
    auto const a = parse_int(parts[0]);
    auto const b = parse_int(parts[1]);
    auto const c = parse_int(parts[2]);
    if (a && b && c) {
      // YYYY-MM-DD or DD-MM-YYYY
      auto d = parts[0].size() == 4
                   ? calendar_date{int(*a), int(*b), int(*c)}
                   : calendar_date{int(*c), int(*b), int(*a)};
      auto const ymd = std::chrono::year_month_day{
          std::chrono::year{d.year}, std::chrono::month(unsigned(d.month)),
          std::chrono::day(unsigned(d.day))};
      if (ymd.ok()) {
        return d;
      }
    }
  }
  throw bad_cell(fmt::format("bad date \"{}\"", s));
}

std::int64_t days_since_epoch(calendar_date const& d) {
  using namespace std::chrono;
  return sys_days{year{d.year} / month(unsigned(d.month)) / day(unsigned(d.day))}
      .time_since_epoch()
      .count();
}

// "YYYY-MM-DDTHH:MM[:SS][zone]"; trailing fields may be truncated.
std::optional<wall_minutes> parse_timestamp(std::string_view s,
                                            std::string_view column) {
  if (is_absent(s)) {
    return std::nullopt;
  }
  s = trim(s);
  try {
    auto const date = parse_date(s.substr(0, 10));
    std::int64_t hour = 0;
    std::int64_t minute = 0;
    if (s.size() > 11) {
      auto const rest = s.substr(11);
      auto const colon = rest.find(':');
      auto const h = parse_int(rest.substr(0, colon));
      if (!h) {
        throw bad_cell("");
      }
      hour = *h;
      if (colon != std::string_view::npos) {
        auto mm = rest.substr(colon + 1, 2);
        auto const stop = mm.find_first_not_of("0123456789");
        mm = mm.substr(0, stop);
        if (!mm.empty()) {
          minute = *parse_int(mm);
        }
      }
    }
    return days_since_epoch(date) * 1440 + hour * 60 + minute;
  } catch (bad_cell const&) {
    throw bad_cell(fmt::format("{}: bad timestamp \"{}\"", column, s));
  }
}

// Column names of the rail archive, including the "Service:"/"Stop:"
// prefixed variants of the public dumps.
std::string normalize_rail_header(std::string_view raw) {
  auto h = to_lower(trim(raw));
  if (h == "stop:rdt-id") {
    return "stop rdt-id";
  }
  for (std::string_view prefix : {"service:", "stop:"}) {
    if (h.starts_with(prefix)) {
      h.erase(0, prefix.size());
    }
  }
  if (h == "service id" || h == "service_id") {
    h = "rdt-id";
  }
  return h;
}

struct rail_columns {
  std::size_t id, date, type, company, completely, partly, station, arr_time,
      arr_delay, arr_cancelled, dep_time, dep_delay, dep_cancelled;
};

rail_columns map_rail_columns(std::vector<std::string> const& header) {
  std::vector<std::string> norm;
  norm.reserve(header.size());
  for (auto const& h : header) {
    norm.push_back(normalize_rail_header(h));
  }
  csv::header_index const idx{norm};
  auto const need = [&](std::string_view name, std::string_view shown) {
    if (auto const i = idx.find(name)) {
      return *i;
    }
    throw format_error(
        fmt::format("rail archive: missing required column \"{}\"", shown));
  };
  return {need("rdt-id", "RDT-ID/Service ID"),
          need("date", "Date"),
          need("type", "Type"),
          need("company", "Company"),
          need("completely cancelled", "Completely cancelled"),
          need("partly cancelled", "Partly cancelled"),
          need("station name", "Station name"),
          need("arrival time", "Arrival time"),
          need("arrival delay", "Arrival delay"),
          need("arrival cancelled", "Arrival cancelled"),
          need("departure time", "Departure time"),
          need("departure delay", "Departure delay"),
          need("departure cancelled", "Departure cancelled")};
}

void record_failure(parse_report& report, parse_options const& opt,
                    std::size_t line, std::string msg) {
  report.errors.push_back({line, std::move(msg)});
  if (report.errors.size() > opt.max_record_errors) {
    throw format_error(fmt::format(
        "more than {} malformed rows (last at line {}: {})",
        opt.max_record_errors, line, report.errors.back().message));
  }
}

std::string bool_str(bool b) { return b ? "True" : "False"; }

}  // namespace

parse_report read_service_archive(
    std::istream& in, parse_options const& opt,
    std::function<void(stop_record&&)> const& sink) {
  parse_report report;
  csv::line_reader reader{in};
  std::string line;
  if (!reader.next(line)) {
    throw format_error("rail archive: missing header row");
  }
  auto const header = csv::split_line(line);
  auto const col = map_rail_columns(header);

  while (reader.next(line)) {
    if (opt.row_limit && report.rows_read >= *opt.row_limit) {
      break;
    }
    ++report.rows_read;
    auto const f = csv::split_line(line);
    if (f.size() != header.size()) {
      record_failure(report, opt, reader.line_number(),
                     fmt::format("expected {} fields, found {}", header.size(),
                                 f.size()));
      continue;
    }
    try {
      stop_record r;
      r.line = reader.line_number();
      r.service_id = std::string{trim(f[col.id])};
      if (r.service_id.empty()) {
        throw bad_cell("empty service id");
      }
      r.date = parse_date(f[col.date]);
      r.service_type = std::string{trim(f[col.type])};
      r.company = std::string{trim(f[col.company])};
      r.completely_cancelled =
          parse_flag(f[col.completely], "Completely cancelled").value_or(false);
      r.partly_cancelled =
          parse_flag(f[col.partly], "Partly cancelled").value_or(false);
      r.station_name = std::string{trim(f[col.station])};
      r.arrival_time = parse_timestamp(f[col.arr_time], "Arrival time");
      r.arrival_delay_min = parse_delay(f[col.arr_delay], "Arrival delay", true);
      r.arrival_cancelled = parse_flag(f[col.arr_cancelled], "Arrival cancelled");
      r.departure_time = parse_timestamp(f[col.dep_time], "Departure time");
      r.departure_delay_min =
          parse_delay(f[col.dep_delay], "Departure delay", false);
      r.departure_cancelled =
          parse_flag(f[col.dep_cancelled], "Departure cancelled");
      ++report.records;
      sink(std::move(r));
    } catch (bad_cell const& e) {
      record_failure(report, opt, reader.line_number(), e.what());
    }
  }
  return report;
}

service_archive parse_service_archive(std::istream& in,
                                      parse_options const& opt) {
  service_archive a;
  a.report = read_service_archive(
      in, opt, [&](stop_record&& r) { a.records.push_back(std::move(r)); });
  return a;
}

service_archive parse_service_archive(std::filesystem::path const& path,
                                      parse_options const& opt) {
  std::ifstream in{path};
  if (!in) {
    throw format_error(fmt::format("cannot open {}", path.string()));
  }
  return parse_service_archive(in, opt);
}

bool service_filter::keeps_type(std::string_view service_type) const {
  auto const t = to_lower(trim(service_type));
  if (!type_allowlist.empty()) {
    return std::any_of(begin(type_allowlist), end(type_allowlist),
                       [&](auto const& a) { return to_lower(a) == t; });
  }
  return std::none_of(
      begin(excluded_type_patterns), end(excluded_type_patterns),
      [&](auto const& p) { return t.find(to_lower(p)) != std::string::npos; });
}

std::vector<stop_record> clean_services(std::vector<stop_record> records,
                                        service_filter const& filter,
                                        clean_report* report) {
  clean_report r;
  std::vector<stop_record> kept;
  kept.reserve(records.size());
  for (auto& rec : records) {
    if (trim(rec.company) != filter.company) {
      ++r.dropped_company;
    } else if (!filter.keeps_type(rec.service_type)) {
      ++r.dropped_type;
    } else {
      kept.push_back(std::move(rec));
    }
  }
  r.kept = kept.size();
  if (report != nullptr) {
    *report = r;
  }
  return kept;
}

std::vector<service_trajectory> extract_trajectories(
    std::vector<stop_record> const& records, extract_report* report) {
  extract_report rep;
  std::unordered_map<std::string_view, std::size_t> group_of;
  std::vector<std::vector<stop_record const*>> groups;
  for (auto const& r : records) {
    auto const [it, inserted] = group_of.emplace(r.service_id, groups.size());
    if (inserted) {
      groups.emplace_back();
    }
    groups[it->second].push_back(&r);
  }
  rep.services = groups.size();

  std::vector<service_trajectory> out;
  for (auto const& g : groups) {
    std::vector<stop_record const*> stops;
    for (auto const* s : g) {
      if (s->arrival_time || s->departure_time) {
        stops.push_back(s);
      }
    }
    if (stops.size() < 2) {
      ++rep.skipped_too_few_stops;
      continue;
    }
    std::stable_sort(begin(stops), end(stops), [](auto const* a, auto const* b) {
      return a->departure_time.value_or(*a->arrival_time) <
             b->departure_time.value_or(*b->arrival_time);
    });

    auto const first_dep = std::find_if(begin(stops), end(stops), [](auto* s) {
      return s->departure_time.has_value();
    });
    auto const last_arr = std::find_if(rbegin(stops), rend(stops), [](auto* s) {
      return s->arrival_time.has_value();
    });
    if (first_dep == end(stops) || last_arr == rend(stops)) {
      ++rep.skipped_no_endpoints;
      continue;
    }
    auto const src = static_cast<std::size_t>(first_dep - begin(stops));
    auto const tgt =
        stops.size() - 1 - static_cast<std::size_t>(last_arr - rbegin(stops));
    if (tgt <= src) {
      ++rep.skipped_no_endpoints;
      continue;
    }
    auto const& source = *stops[src];
    auto const& target = *stops[tgt];
    if (source.station_name == target.station_name) {
      ++rep.skipped_same_station;
      continue;
    }

    service_trajectory t;
    t.service_id = source.service_id;
    t.month = source.date.month_of();
    t.source_station = source.station_name;
    t.target_station = target.station_name;
    // An absent cancellation flag on the final arrival counts as cancelled.
    t.final_arrival_cancelled = target.arrival_cancelled.value_or(true);
    if (target.arrival_delay_min) {
      t.final_arrival_delay_min =
          static_cast<int>(std::llround(*target.arrival_delay_min));
    } else {
      t.final_arrival_delay_min =
          t.final_arrival_cancelled ? 0 : unfinished_delay;
    }
    t.completely_cancelled = std::any_of(
        begin(g), end(g), [](auto* s) { return s->completely_cancelled; });
    for (auto i = src + 1; i < tgt; ++i) {
      if (stops[i]->arrival_delay_min.value_or(0.0) > 0.0) {
        t.had_intermediate_delay = true;
        break;
      }
    }
    out.push_back(std::move(t));
  }
  rep.trajectories = out.size();
  if (report != nullptr) {
    *report = rep;
  }
  return out;
}

void write_trajectories(std::ostream& out,
                        std::vector<service_trajectory> const& trajectories) {
  csv::write_row(out, {"service_id", "month", "source", "target",
                       "final_arrival_delay_min", "final_arrival_cancelled",
                       "completely_cancelled", "had_intermediate_delay"});
  for (auto const& t : trajectories) {
    csv::write_row(out, {t.service_id, t.month.str(), t.source_station,
                         t.target_station,
                         std::to_string(t.final_arrival_delay_min),
                         bool_str(t.final_arrival_cancelled),
                         bool_str(t.completely_cancelled),
                         bool_str(t.had_intermediate_delay)});
  }
}

std::vector<service_trajectory> read_trajectories(std::istream& in) {
  csv::line_reader reader{in};
  std::string line;
  if (!reader.next(line)) {
    throw format_error("trajectories: missing header row");
  }
  csv::header_index const h{csv::split_line(line)};
  auto const c_id = h.require("service_id");
  auto const c_month = h.require("month");
  auto const c_src = h.require("source");
  auto const c_tgt = h.require("target");
  auto const c_delay = h.require("final_arrival_delay_min");
  auto const c_fac = h.require("final_arrival_cancelled");
  auto const c_cc = h.require("completely_cancelled");
  auto const c_int = h.require("had_intermediate_delay");

  std::vector<service_trajectory> out;
  while (reader.next(line)) {
    auto const f = csv::split_line(line);
    if (f.size() != h.size()) {
      throw format_error(
          fmt::format("trajectories line {}: wrong field count",
                      reader.line_number()));
    }
    try {
      service_trajectory t;
      t.service_id = f[c_id];
      t.month = month_key::parse(f[c_month]);
      t.source_station = f[c_src];
      t.target_station = f[c_tgt];
      auto const d = parse_int(f[c_delay]);
      if (!d) {
        throw bad_cell("bad delay");
      }
      t.final_arrival_delay_min = static_cast<int>(*d);
      t.final_arrival_cancelled = parse_flag(f[c_fac], "").value_or(false);
      t.completely_cancelled = parse_flag(f[c_cc], "").value_or(false);
      t.had_intermediate_delay = parse_flag(f[c_int], "").value_or(false);
      out.push_back(std::move(t));
    } catch (std::exception const& e) {
      throw format_error(fmt::format("trajectories line {}: {}",
                                     reader.line_number(), e.what()));
    }
  }
  return out;
}

std::vector<flight_record> parse_flights(std::istream& in,
                                         parse_options const& opt,
                                         parse_report* report) {
  parse_report rep;
  csv::line_reader reader{in};
  std::string line;
  if (!reader.next(line)) {
    throw format_error("flight table: missing header row");
  }
  auto const header = csv::split_line(line);
  csv::header_index const h{header};
  auto const c_year = h.require("year");
  auto const c_month = h.require("month");
  auto const c_src = h.require("source");
  auto const c_tgt = h.require("target");
  auto const c_pax = h.require("passengers");
  auto const c_w = h.require("weight");

  auto const count = [](std::string_view s, std::string_view column) {
    auto const v = parse_double(s);
    if (!v || !std::isfinite(*v) || *v < 0 || std::floor(*v) != *v) {
      throw bad_cell(fmt::format("{}: not a non-negative count: \"{}\"",
                                 column, s));
    }
    return static_cast<std::int64_t>(*v);
  };

  std::vector<flight_record> out;
  while (reader.next(line)) {
    if (opt.row_limit && rep.rows_read >= *opt.row_limit) {
      break;
    }
    ++rep.rows_read;
    auto const f = csv::split_line(line);
    if (f.size() != header.size()) {
      record_failure(rep, opt, reader.line_number(),
                     fmt::format("expected {} fields, found {}", header.size(),
                                 f.size()));
      continue;
    }
    try {
      flight_record r;
      r.year = static_cast<int>(count(f[c_year], "YEAR"));
      r.month = static_cast<int>(count(f[c_month], "MONTH"));
      if (r.month < 1 || r.month > 12) {
        throw bad_cell(fmt::format("MONTH out of range: {}", r.month));
      }
      r.source = std::string{trim(f[c_src])};
      r.target = std::string{trim(f[c_tgt])};
      r.passengers = count(f[c_pax], "Passengers");
      r.weight = count(f[c_w], "Weight");
      out.push_back(std::move(r));
      ++rep.records;
    } catch (bad_cell const& e) {
      record_failure(rep, opt, reader.line_number(), e.what());
    }
  }
  if (report != nullptr) {
    *report = std::move(rep);
  }
  return out;
}

std::vector<flight_record> clean_flights(std::vector<flight_record> records,
                                         flight_clean_report* report) {
  flight_clean_report rep;
  std::vector<flight_record> kept;
  kept.reserve(records.size());
  for (auto& r : records) {
    if (r.source == r.target) {
      ++rep.dropped_self_loop;
    } else if (r.weight == 0) {
      ++rep.dropped_zero_weight;
    } else {
      kept.push_back(std::move(r));
    }
  }
  rep.kept = kept.size();
  if (report != nullptr) {
    *report = rep;
  }
  return kept;
}

void write_flights(std::ostream& out, std::vector<flight_record> const& rows) {
  csv::write_row(out,
                 {"YEAR", "MONTH", "Source", "Target", "Passengers", "Weight"});
  for (auto const& r : rows) {
    csv::write_row(out, {std::to_string(r.year), std::to_string(r.month),
                         r.source, r.target, std::to_string(r.passengers),
                         std::to_string(r.weight)});
  }
}

}  // namespace delaynet
