#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "fmt/core.h"
#include "gtest/gtest.h"

#include "delaynet/common.h"
#include "delaynet/ingest.h"

using namespace delaynet;

namespace {

// Preview rows of the public NS archive (truncated timestamps as published).
constexpr auto preview = R"(RDT-ID,Date,Type,Company,Completely cancelled,Partly cancelled,Maximum delay,Station name,Arrival time,Arrival delay,Arrival cancelled,Departure time,Departure delay,Departure cancelled
738804,01-01-2019,Intercity,NS,False,False,1,Rotterdam Centraal,NaN,NaN,NaN,2019-01-01T02:0,1.0,False
738804,01-01-2019,Intercity,NS,False,False,0,Delft,2019-01-01T01:0,1.0,False,2019-01-01T02:1,0.0,False
738804,01-01-2019,Intercity,NS,False,False,0,Den Haag HS,2019-01-01T01:1,0.0,False,2019-01-01T02:2,1.0,False
738804,01-01-2019,Intercity,NS,False,False,0,Leiden Centraal,2019-01-01T01:2,0.0,False,2019-01-01T02:4,0.0,False
738804,01-01-2019,Intercity,NS,False,False,0,Schiphol Airport,2019-01-01T01:3,0.0,False,2019-01-01T03:0,0.0,False
13090236,29-02-2024,Intercity,NS,False,False,0,Amsterdam Zuid,2024-03-01T00:4,8.0,False,2024-03-01T00:4,9.0,False
13090236,29-02-2024,Intercity,NS,False,False,0,Schiphol Airport,2024-03-01T00:5,9.0,False,2024-03-01T00:5,8.0,False
13090236,29-02-2024,Intercity,NS,False,False,0,Leiden Centraal,2024-03-01T00:5,8.0,False,2024-03-01T00:7,8.0,False
13092579,29-02-2024,Extra trein,NS,False,False,0,Meppel,NaN,NaN,NaN,NaN,NaN,NaN
)";

constexpr auto header =
    "Service:RDT-ID,Service:Date,Service:Type,Service:Company,"
    "Service:Completely cancelled,Service:Partly cancelled,Stop:Station name,"
    "Stop:Arrival time,Stop:Arrival delay,Stop:Arrival cancelled,"
    "Stop:Departure time,Stop:Departure delay,Stop:Departure cancelled\n";

std::string stop_row(std::string const& id, std::string const& company,
                     std::string const& type, std::string const& station,
                     std::string const& arr, std::string const& arr_delay,
                     std::string const& arr_cancel, std::string const& dep,
                     bool completely = false) {
  return fmt::format("{},2019-03-04,{},{},{},False,{},{},{},{},{},{},{}\n", id,
                     type, company, completely ? "True" : "False", station, arr,
                     arr_delay, arr_cancel, dep, dep.empty() ? "" : "0",
                     dep.empty() ? "" : "False");
}

service_archive parse(std::string const& text, parse_options opt = {}) {
  std::istringstream in{text};
  return parse_service_archive(in, opt);
}

}  // namespace

TEST(parse_service_archive, preview_first_row) {
  auto const a = parse(preview);
  ASSERT_EQ(a.records.size(), 9u);
  EXPECT_TRUE(a.report.errors.empty());
  auto const& r = a.records.front();
  EXPECT_EQ(r.service_id, "738804");
  EXPECT_EQ(r.station_name, "Rotterdam Centraal");
  EXPECT_EQ(r.date, (calendar_date{2019, 1, 1}));
  EXPECT_FALSE(r.arrival_time);
  EXPECT_FALSE(r.arrival_delay_min);
  EXPECT_FALSE(r.arrival_cancelled);
  ASSERT_TRUE(r.departure_delay_min);
  EXPECT_EQ(*r.departure_delay_min, 1.0);
  EXPECT_EQ(r.departure_cancelled, false);
}

TEST(parse_service_archive, empty_file_with_header) {
  auto const a = parse(header);
  EXPECT_TRUE(a.records.empty());
  EXPECT_TRUE(a.report.errors.empty());
}

TEST(parse_service_archive, bad_delay_is_a_record_error) {
  auto const a = parse(std::string{header} +
                       "1,2019-03-04,Intercity,NS,False,False,Utrecht Centraal,"
                       "2019-03-04T10:00,abc,False,,,\n");
  EXPECT_TRUE(a.records.empty());
  ASSERT_EQ(a.report.errors.size(), 1u);
  EXPECT_EQ(a.report.errors[0].line, 2u);
}

TEST(parse_service_archive, empty_delay_stays_absent) {
  auto const a = parse(std::string{header} +
                       stop_row("1", "NS", "Sprinter", "Utrecht Centraal",
                                "2019-03-04T10:00", "", "False", ""));
  ASSERT_EQ(a.records.size(), 1u);
  EXPECT_FALSE(a.records[0].arrival_delay_min);
}

TEST(parse_service_archive, missing_column_is_fatal) {
  EXPECT_THROW(parse("RDT-ID,Date\n1,2019-01-01\n"), format_error);
}

TEST(parse_service_archive, error_cap) {
  std::string text = header;
  for (auto i = 0; i < 5; ++i) {
    text += "1,2,3\n";
  }
  parse_options opt;
  opt.max_record_errors = 3;
  EXPECT_THROW(parse(text, opt), format_error);
  opt.max_record_errors = 5;
  EXPECT_EQ(parse(text, opt).report.errors.size(), 5u);
}

TEST(parse_service_archive, row_limit) {
  parse_options opt;
  opt.row_limit = 4;
  EXPECT_EQ(parse(preview, opt).records.size(), 4u);
}

TEST(clean_services, provider_and_type_rules) {
  std::string text = header;
  text += stop_row("1", "Arriva", "Stoptrein", "A", "", "", "", "2019-03-04T10:00");
  text += stop_row("2", "NS", "Intercity", "B", "", "", "", "2019-03-04T10:00");
  text += stop_row("3", "NS", "Snelbus ipv trein", "C", "", "", "", "2019-03-04T10:00");
  text += stop_row("4", "NS", "Taxibus ipv trein", "D", "", "", "", "2019-03-04T10:00");
  clean_report rep;
  auto const kept = clean_services(parse(text).records, {}, &rep);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].service_id, "2");
  EXPECT_EQ(rep.dropped_company, 1u);
  EXPECT_EQ(rep.dropped_type, 2u);
  EXPECT_TRUE(clean_services({}).empty());

  service_filter only_ic;
  only_ic.type_allowlist = {"intercity"};
  EXPECT_TRUE(only_ic.keeps_type("Intercity"));
  EXPECT_FALSE(only_ic.keeps_type("Sprinter"));
}

TEST(extract_trajectories, preview_services) {
  extract_report rep;
  auto const t = extract_trajectories(parse(preview).records, &rep);
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0].service_id, "738804");
  EXPECT_EQ(t[0].source_station, "Rotterdam Centraal");
  EXPECT_EQ(t[0].target_station, "Schiphol Airport");
  EXPECT_EQ(t[0].final_arrival_delay_min, 0);
  EXPECT_FALSE(t[0].final_arrival_cancelled);
  EXPECT_EQ(t[0].month, (month_key{2019, 1}));
  // Delft arrived 1 minute late.
  EXPECT_TRUE(t[0].had_intermediate_delay);

  // Crosses midnight into March; the month comes from the service date.
  EXPECT_EQ(t[1].month, (month_key{2024, 2}));
  EXPECT_EQ(t[1].source_station, "Amsterdam Zuid");
  EXPECT_EQ(t[1].target_station, "Leiden Centraal");
  EXPECT_EQ(t[1].final_arrival_delay_min, 8);

  EXPECT_EQ(rep.services, 3u);
  EXPECT_EQ(rep.skipped_too_few_stops, 1u);
}

TEST(extract_trajectories, cancelled_last_arrival) {
  std::string text = header;
  text += stop_row("9", "NS", "Sprinter", "Gouda", "", "", "", "2019-03-04T10:00");
  text += stop_row("9", "NS", "Sprinter", "Utrecht Centraal", "2019-03-04T10:20",
                   "", "True", "");
  auto const t = extract_trajectories(parse(text).records);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_TRUE(t[0].final_arrival_cancelled);
  EXPECT_EQ(t[0].final_arrival_delay_min, 0);
}

TEST(extract_trajectories, unfinished_gets_sentinel) {
  std::string text = header;
  text += stop_row("9", "NS", "Sprinter", "Gouda", "", "", "", "2019-03-04T10:00");
  text += stop_row("9", "NS", "Sprinter", "Utrecht Centraal", "2019-03-04T10:20",
                   "", "False", "");
  auto const t = extract_trajectories(parse(text).records);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].final_arrival_delay_min, unfinished_delay);
}

TEST(extract_trajectories, single_stop_skipped) {
  std::string text = header;
  text += stop_row("9", "NS", "Sprinter", "Gouda", "", "", "", "2019-03-04T10:00");
  extract_report rep;
  EXPECT_TRUE(extract_trajectories(parse(text).records, &rep).empty());
  EXPECT_EQ(rep.skipped_too_few_stops, 1u);
}

// Random interleaved archives: every service with >= 2 stops yields exactly
// one trajectory from its first to its last station, regardless of row order.
TEST(extract_trajectories, random_archives_match_direct_count) {
  std::mt19937_64 rng{11};
  for (auto round = 0; round < 20; ++round) {
    struct service {
      std::vector<std::string> rows;
      std::string first, last;
      int last_delay;
    };
    std::vector<service> services;
    std::vector<std::string> all_rows;
    std::size_t expected = 0;
    for (auto s = 0; s < 100; ++s) {
      service sv;
      auto const id = fmt::format("{}", 1000 + s);
      auto const n = std::uniform_int_distribution<int>{1, 5}(rng);
      std::vector<int> stations(20);
      std::iota(begin(stations), end(stations), 0);
      std::shuffle(begin(stations), end(stations), rng);
      sv.last_delay = std::uniform_int_distribution<int>{0, 9}(rng);
      for (auto k = 0; k < n; ++k) {
        auto const name = fmt::format("S{}", stations[k]);
        auto const t = fmt::format("2019-03-04T{:02}:{:02}", 6 + k, 0);
        auto const t2 = fmt::format("2019-03-04T{:02}:{:02}", 6 + k, 2);
        auto const first = k == 0;
        auto const last = k == n - 1;
        all_rows.push_back(stop_row(
            id, "NS", "Sprinter", name, first ? "" : t,
            first ? "" : (last ? std::to_string(sv.last_delay) : "0"),
            first ? "" : "False", last ? "" : t2));
        if (first) {
          sv.first = name;
        }
        sv.last = name;
      }
      expected += n >= 2 ? 1 : 0;
      services.push_back(sv);
    }
    std::shuffle(begin(all_rows), end(all_rows), rng);
    std::string text = header;
    for (auto const& r : all_rows) {
      text += r;
    }
    auto const traj = extract_trajectories(parse(text).records);
    ASSERT_EQ(traj.size(), expected);
    for (auto const& t : traj) {
      auto const& sv = services[std::stoul(t.service_id) - 1000];
      EXPECT_EQ(t.source_station, sv.first);
      EXPECT_EQ(t.target_station, sv.last);
      EXPECT_EQ(t.final_arrival_delay_min, sv.last_delay);
    }
  }
}

TEST(trajectories, round_trip) {
  auto const t = extract_trajectories(parse(preview).records);
  std::stringstream s;
  write_trajectories(s, t);
  EXPECT_EQ(read_trajectories(s), t);
}

TEST(flights, parse_and_clean) {
  std::istringstream in{
      "YEAR,MONTH,Source,Target,Passengers,Weight\n"
      "2019,1,abilene_tx,abilene_tx,10,2\n"
      "2019,1,abilene_tx,dallas_tx,120.0,45.0\n"
      "2019,1,dallas_tx,austin_tx,0,0\n"
      "2019,13,dallas_tx,austin_tx,0,1\n"};
  parse_report rep;
  auto rows = parse_flights(in, {}, &rep);
  EXPECT_EQ(rows.size(), 3u);
  EXPECT_EQ(rep.errors.size(), 1u);
  EXPECT_EQ(rows[1].weight, 45);
  flight_clean_report fr;
  auto const kept = clean_flights(rows, &fr);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].target, "dallas_tx");
  EXPECT_EQ(fr.dropped_self_loop, 1u);
  EXPECT_EQ(fr.dropped_zero_weight, 1u);
}
