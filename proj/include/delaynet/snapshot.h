#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "delaynet/ingest.h"
#include "delaynet/month.h"

namespace delaynet {

// Per (month, source, target) ride statistics. Mirrors the monthly table of
// the transformed rail archive.
struct monthly_edge_aggregate {
  month_key month;
  std::string source;
  std::string target;
  std::int64_t rides_planned{0};
  std::int64_t final_arrival_delay_count{0};
  std::int64_t final_arrival_cancelled_count{0};
  std::int64_t completely_cancelled_count{0};
  std::int64_t intermediate_delay_count{0};
  double proportion_delayed{0.0};
  std::optional<bool> label;

  friend bool operator==(monthly_edge_aggregate const&,
                         monthly_edge_aggregate const&) = default;
};

// delayed / (planned - completely cancelled); 0 when nothing ran.
double proportion_delayed(std::int64_t rides_planned, std::int64_t delayed,
                          std::int64_t completely_cancelled);

// One aggregate per distinct (month, source, target), sorted by that key.
std::vector<monthly_edge_aggregate> aggregate_monthly(
    std::span<service_trajectory const> trajectories);

// Flights become aggregates with rides_planned = departures performed.
// Duplicate (year, month, source, target) rows are summed.
std::vector<monthly_edge_aggregate> aggregate_flights(
    std::span<flight_record const> flights);

struct filter_report {
  std::size_t kept{0};
  std::size_t dropped_min_rides{0};
  std::size_t dropped_foreign{0};
};

std::vector<monthly_edge_aggregate> apply_filters(
    std::vector<monthly_edge_aggregate> aggregates, std::int64_t min_rides = 4,
    std::set<std::string> const* domestic_stations = nullptr,
    filter_report* report = nullptr);

// Linear-interpolated percentile of proportion_delayed over all rows.
double significant_delay_threshold(
    std::span<monthly_edge_aggregate const> aggregates,
    double percentile = 0.5);

// label = proportion_delayed > threshold (strict).
void label_significant_delay(std::span<monthly_edge_aggregate> aggregates,
                             double threshold);

// Undirected weighted graph of one month. Node ids are indices into the
// lexicographically sorted node names.
class graph_snapshot {
public:
  using weight_t = std::int64_t;
  struct edge {
    std::size_t u, v;  // u < v
    weight_t weight;
  };
  struct neighbor {
    std::size_t node;
    weight_t weight;
  };

  graph_snapshot() = default;
  graph_snapshot(month_key month, std::vector<std::string> node_names,
                 std::vector<edge> edges);

  month_key month() const { return month_; }
  std::size_t node_count() const { return names_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  std::vector<std::string> const& node_names() const { return names_; }
  std::string const& name(std::size_t i) const { return names_.at(i); }
  std::optional<std::size_t> index_of(std::string_view name) const;

  std::vector<edge> const& edges() const { return edges_; }
  // Sorted by neighbour index.
  std::span<neighbor const> neighbors(std::size_t i) const {
    return adjacency_.at(i);
  }

  std::size_t degree(std::size_t i) const { return adjacency_.at(i).size(); }
  weight_t strength(std::size_t i) const { return strength_.at(i); }
  // 0 when not adjacent.
  weight_t weight(std::size_t i, std::size_t j) const;
  bool has_edge(std::string_view a, std::string_view b) const;

private:
  month_key month_;
  std::vector<std::string> names_;
  std::vector<edge> edges_;
  std::vector<std::vector<neighbor>> adjacency_;
  std::vector<weight_t> strength_;
};

// Symmetrises directed aggregates of one month: (a,b) and (b,a) ride counts
// sum into one edge weight. Throws std::invalid_argument on mixed months or
// self-loops.
graph_snapshot build_graph(std::span<monthly_edge_aggregate const> aggregates);

// Groups by month and builds one snapshot per month, ascending.
std::vector<graph_snapshot> build_graphs(
    std::span<monthly_edge_aggregate const> aggregates);

// One labelled row per edge of `current`: true when the edge is absent from
// `next`. Throws std::invalid_argument unless next is current's successor.
std::vector<monthly_edge_aggregate> label_removed_links(
    graph_snapshot const& current, graph_snapshot const& next);

// Removed-link rows for every month that has a successor snapshot.
std::vector<monthly_edge_aggregate> label_removed_links(
    std::span<graph_snapshot const> snapshots);

void write_aggregates(std::ostream& out,
                      std::span<monthly_edge_aggregate const> rows);
std::vector<monthly_edge_aggregate> read_aggregates(std::istream& in);

void write_snapshots(std::ostream& out,
                     std::span<graph_snapshot const> snapshots);
std::vector<graph_snapshot> read_snapshots(std::istream& in);

}  // namespace delaynet
