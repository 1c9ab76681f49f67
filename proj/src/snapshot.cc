#include "delaynet/snapshot.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>

#include <fmt/core.h>

#include "delaynet/common.h"
#include "delaynet/csv.h"

namespace delaynet {

double proportion_delayed(std::int64_t rides_planned, std::int64_t delayed,
                          std::int64_t completely_cancelled) {
  auto const ran = rides_planned - completely_cancelled;
  return ran > 0 ? static_cast<double>(delayed) / static_cast<double>(ran)
                 : 0.0;
}

namespace {

using edge_key = std::tuple<month_key, std::string, std::string>;

}  // namespace

std::vector<monthly_edge_aggregate> aggregate_monthly(
    std::span<service_trajectory const> trajectories) {
  std::map<edge_key, monthly_edge_aggregate> groups;
  for (auto const& t : trajectories) {
    auto& a = groups[{t.month, t.source_station, t.target_station}];
    if (a.rides_planned == 0) {
      a.month = t.month;
      a.source = t.source_station;
      a.target = t.target_station;
    }
    ++a.rides_planned;
    // The -1 sentinel (unfinished) is neither delayed nor cancelled.
    if (!t.completely_cancelled && t.final_arrival_delay_min > 0) {
      ++a.final_arrival_delay_count;
    }
    a.final_arrival_cancelled_count += t.final_arrival_cancelled ? 1 : 0;
    a.completely_cancelled_count += t.completely_cancelled ? 1 : 0;
    a.intermediate_delay_count += t.had_intermediate_delay ? 1 : 0;
  }
  std::vector<monthly_edge_aggregate> out;
  out.reserve(groups.size());
  for (auto& [key, a] : groups) {
    a.proportion_delayed = proportion_delayed(
        a.rides_planned, a.final_arrival_delay_count,
        a.completely_cancelled_count);
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<monthly_edge_aggregate> aggregate_flights(
    std::span<flight_record const> flights) {
  std::map<edge_key, monthly_edge_aggregate> groups;
  for (auto const& f : flights) {
    month_key const m{f.year, f.month};
    auto& a = groups[{m, f.source, f.target}];
    a.month = m;
    a.source = f.source;
    a.target = f.target;
    a.rides_planned += f.weight;
  }
  std::vector<monthly_edge_aggregate> out;
  out.reserve(groups.size());
  for (auto& [key, a] : groups) {
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<monthly_edge_aggregate> apply_filters(
    std::vector<monthly_edge_aggregate> aggregates, std::int64_t min_rides,
    std::set<std::string> const* domestic_stations, filter_report* report) {
  if (min_rides < 1) {
    throw std::invalid_argument("min_rides must be >= 1");
  }
  filter_report rep;
  std::vector<monthly_edge_aggregate> kept;
  kept.reserve(aggregates.size());
  for (auto& a : aggregates) {
    if (a.rides_planned < min_rides) {
      ++rep.dropped_min_rides;
    } else if (domestic_stations != nullptr &&
               (!domestic_stations->contains(a.source) ||
                !domestic_stations->contains(a.target))) {
      ++rep.dropped_foreign;
    } else {
      kept.push_back(std::move(a));
    }
  }
  rep.kept = kept.size();
  if (report != nullptr) {
    *report = rep;
  }
  return kept;
}

double significant_delay_threshold(
    std::span<monthly_edge_aggregate const> aggregates, double percentile) {
  if (aggregates.empty()) {
    throw data_error("percentile of an empty aggregate list");
  }
  if (!(percentile >= 0.0 && percentile <= 1.0)) {
    throw std::invalid_argument("percentile must lie in [0, 1]");
  }
  std::vector<double> v;
  v.reserve(aggregates.size());
  for (auto const& a : aggregates) {
    v.push_back(a.proportion_delayed);
  }
  std::sort(begin(v), end(v));
  auto const pos = percentile * static_cast<double>(v.size() - 1);
  auto const lo = static_cast<std::size_t>(std::floor(pos));
  auto const hi = std::min(lo + 1, v.size() - 1);
  auto const frac = pos - static_cast<double>(lo);
  return frac == 0.0 ? v[lo] : v[lo] + frac * (v[hi] - v[lo]);
}

void label_significant_delay(std::span<monthly_edge_aggregate> aggregates,
                             double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw std::invalid_argument("threshold must lie in [0, 1]");
  }
  for (auto& a : aggregates) {
    a.label = a.proportion_delayed > threshold;
  }
}

graph_snapshot::graph_snapshot(month_key month,
                               std::vector<std::string> node_names,
                               std::vector<edge> edges)
    : month_{month},
      names_{std::move(node_names)},
      edges_{std::move(edges)},
      adjacency_(names_.size()),
      strength_(names_.size(), 0) {
  for (auto const& e : edges_) {
    if (e.u >= e.v || e.v >= names_.size() || e.weight < 1) {
      throw std::invalid_argument("graph_snapshot: malformed edge");
    }
    adjacency_[e.u].push_back({e.v, e.weight});
    adjacency_[e.v].push_back({e.u, e.weight});
    strength_[e.u] += e.weight;
    strength_[e.v] += e.weight;
  }
  for (auto& adj : adjacency_) {
    std::sort(begin(adj), end(adj),
              [](auto const& a, auto const& b) { return a.node < b.node; });
    for (std::size_t k = 1; k < adj.size(); ++k) {
      if (adj[k].node == adj[k - 1].node) {
        throw std::invalid_argument("graph_snapshot: duplicate edge");
      }
    }
  }
}

std::optional<std::size_t> graph_snapshot::index_of(
    std::string_view name) const {
  auto const it = std::lower_bound(begin(names_), end(names_), name);
  if (it == end(names_) || *it != name) {
    return std::nullopt;
  }
  return static_cast<std::size_t>(it - begin(names_));
}

graph_snapshot::weight_t graph_snapshot::weight(std::size_t i,
                                                std::size_t j) const {
  auto const adj = neighbors(i);
  auto const it = std::lower_bound(
      begin(adj), end(adj), j,
      [](neighbor const& n, std::size_t node) { return n.node < node; });
  return it != end(adj) && it->node == j ? it->weight : 0;
}

bool graph_snapshot::has_edge(std::string_view a, std::string_view b) const {
  auto const i = index_of(a);
  auto const j = index_of(b);
  return i && j && weight(*i, *j) > 0;
}

graph_snapshot build_graph(std::span<monthly_edge_aggregate const> aggregates) {
  if (aggregates.empty()) {
    return {};
  }
  auto const month = aggregates.front().month;
  std::map<std::pair<std::string, std::string>, graph_snapshot::weight_t> w;
  for (auto const& a : aggregates) {
    if (a.month != month) {
      throw std::invalid_argument(
          fmt::format("build_graph: mixed months {} and {}", month.str(),
                      a.month.str()));
    }
    if (a.source == a.target) {
      throw std::invalid_argument(
          fmt::format("build_graph: self-loop at {}", a.source));
    }
    if (a.rides_planned < 1) {
      throw std::invalid_argument(fmt::format(
          "build_graph: non-positive weight on {}-{}", a.source, a.target));
    }
    auto key = a.source < a.target ? std::pair{a.source, a.target}
                                   : std::pair{a.target, a.source};
    w[std::move(key)] += a.rides_planned;
  }
  std::vector<std::string> names;
  for (auto const& [key, weight] : w) {
    names.push_back(key.first);
    names.push_back(key.second);
  }
  std::sort(begin(names), end(names));
  names.erase(std::unique(begin(names), end(names)), end(names));
  auto const index = [&](std::string const& n) {
    return static_cast<std::size_t>(
        std::lower_bound(begin(names), end(names), n) - begin(names));
  };
  std::vector<graph_snapshot::edge> edges;
  edges.reserve(w.size());
  for (auto const& [key, weight] : w) {
    edges.push_back({index(key.first), index(key.second), weight});
  }
  return {month, std::move(names), std::move(edges)};
}

std::vector<graph_snapshot> build_graphs(
    std::span<monthly_edge_aggregate const> aggregates) {
  std::map<month_key, std::vector<monthly_edge_aggregate>> by_month;
  for (auto const& a : aggregates) {
    by_month[a.month].push_back(a);
  }
  std::vector<graph_snapshot> out;
  out.reserve(by_month.size());
  for (auto const& [m, rows] : by_month) {
    out.push_back(build_graph(rows));
  }
  return out;
}

std::vector<monthly_edge_aggregate> label_removed_links(
    graph_snapshot const& current, graph_snapshot const& next) {
  if (next.month() != current.month().successor()) {
    throw std::invalid_argument(
        fmt::format("label_removed_links: {} does not follow {}",
                    next.month().str(), current.month().str()));
  }
  std::vector<monthly_edge_aggregate> out;
  out.reserve(current.edge_count());
  for (auto const& e : current.edges()) {
    monthly_edge_aggregate a;
    a.month = current.month();
    a.source = current.name(e.u);
    a.target = current.name(e.v);
    a.rides_planned = e.weight;
    a.label = !next.has_edge(a.source, a.target);
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<monthly_edge_aggregate> label_removed_links(
    std::span<graph_snapshot const> snapshots) {
  std::vector<monthly_edge_aggregate> out;
  for (std::size_t k = 0; k + 1 < snapshots.size(); ++k) {
    if (snapshots[k + 1].month() != snapshots[k].month().successor()) {
      continue;
    }
    auto rows = label_removed_links(snapshots[k], snapshots[k + 1]);
    out.insert(end(out), std::make_move_iterator(begin(rows)),
               std::make_move_iterator(end(rows)));
  }
  return out;
}

void write_aggregates(std::ostream& out,
                      std::span<monthly_edge_aggregate const> rows) {
  csv::write_row(out, {"YearMonth", "source", "target", "rides_planned",
                       "final_arrival_delay_count",
                       "final_arrival_cancelled_count",
                       "completely_cancelled_count", "intermediate_delay_count",
                       "proportion_delayed", "label"});
  for (auto const& a : rows) {
    csv::write_row(
        out, {a.month.str(), a.source, a.target,
              std::to_string(a.rides_planned),
              std::to_string(a.final_arrival_delay_count),
              std::to_string(a.final_arrival_cancelled_count),
              std::to_string(a.completely_cancelled_count),
              std::to_string(a.intermediate_delay_count),
              format_double(a.proportion_delayed),
              a.label ? (*a.label ? "True" : "False") : ""});
  }
}

std::vector<monthly_edge_aggregate> read_aggregates(std::istream& in) {
  csv::line_reader reader{in};
  std::string line;
  if (!reader.next(line)) {
    throw format_error("aggregates: missing header row");
  }
  csv::header_index const h{csv::split_line(line)};
  auto const c_month = h.require("YearMonth");
  auto const c_src = h.require("source");
  auto const c_tgt = h.require("target");
  auto const c_rides = h.require("rides_planned");
  auto const c_del = h.require("final_arrival_delay_count");
  auto const c_fac = h.require("final_arrival_cancelled_count");
  auto const c_cc = h.require("completely_cancelled_count");
  auto const c_int = h.require("intermediate_delay_count");
  auto const c_prop = h.require("proportion_delayed");
  auto const c_label = h.require("label");

  std::vector<monthly_edge_aggregate> out;
  while (reader.next(line)) {
    auto const f = csv::split_line(line);
    auto const fail = [&](std::string_view what) {
      return format_error(fmt::format("aggregates line {}: {}",
                                      reader.line_number(), what));
    };
    if (f.size() != h.size()) {
      throw fail("wrong field count");
    }
    auto const num = [&](std::size_t c) {
      auto const v = parse_int(f[c]);
      if (!v) {
        throw fail(fmt::format("bad count \"{}\"", f[c]));
      }
      return *v;
    };
    monthly_edge_aggregate a;
    try {
      a.month = month_key::parse(f[c_month]);
    } catch (std::invalid_argument const& e) {
      throw fail(e.what());
    }
    a.source = f[c_src];
    a.target = f[c_tgt];
    a.rides_planned = num(c_rides);
    a.final_arrival_delay_count = num(c_del);
    a.final_arrival_cancelled_count = num(c_fac);
    a.completely_cancelled_count = num(c_cc);
    a.intermediate_delay_count = num(c_int);
    auto const p = parse_double(f[c_prop]);
    if (!p) {
      throw fail("bad proportion");
    }
    a.proportion_delayed = *p;
    auto const label = to_lower(trim(f[c_label]));
    if (label == "true" || label == "1") {
      a.label = true;
    } else if (label == "false" || label == "0") {
      a.label = false;
    } else if (!label.empty()) {
      throw fail(fmt::format("bad label \"{}\"", f[c_label]));
    }
    out.push_back(std::move(a));
  }
  return out;
}

void write_snapshots(std::ostream& out,
                     std::span<graph_snapshot const> snapshots) {
  csv::write_row(out, {"month", "source", "target", "weight"});
  for (auto const& g : snapshots) {
    for (auto const& e : g.edges()) {
      csv::write_row(out, {g.month().str(), g.name(e.u), g.name(e.v),
                           std::to_string(e.weight)});
    }
  }
}

std::vector<graph_snapshot> read_snapshots(std::istream& in) {
  csv::line_reader reader{in};
  std::string line;
  if (!reader.next(line)) {
    throw format_error("snapshots: missing header row");
  }
  csv::header_index const h{csv::split_line(line)};
  auto const c_month = h.require("month");
  auto const c_src = h.require("source");
  auto const c_tgt = h.require("target");
  auto const c_w = h.require("weight");
  std::vector<monthly_edge_aggregate> rows;
  while (reader.next(line)) {
    auto const f = csv::split_line(line);
    if (f.size() != h.size()) {
      throw format_error(fmt::format("snapshots line {}: wrong field count",
                                     reader.line_number()));
    }
    monthly_edge_aggregate a;
    auto const w = parse_int(f[c_w]);
    if (!w || *w < 1) {
      throw format_error(fmt::format("snapshots line {}: bad weight",
                                     reader.line_number()));
    }
    a.month = month_key::parse(f[c_month]);
    a.source = f[c_src];
    a.target = f[c_tgt];
    a.rides_planned = *w;
    rows.push_back(std::move(a));
  }
  return build_graphs(rows);
}

}  // namespace delaynet
