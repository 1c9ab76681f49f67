#include "delaynet/features.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>

#include <fmt/core.h>

#include "delaynet/common.h"
#include "delaynet/csv.h"

namespace delaynet {

namespace {

constexpr std::array<std::string_view, tf_width> tf_names{
    "cn", "sa", "ja", "so", "hpi", "hdi", "lhni", "pa", "aa", "ra", "lpi"};
constexpr std::array<std::string_view, wtf_width> wtf_names{
    "wcn",  "wsa",   "wja", "wso", "whpi", "whdi",
    "wlhni", "wpa", "waa", "wra", "wlpi"};
constexpr std::array<std::string_view, ncm_width> ncm_names{
    "deg_src", "deg_tgt", "clo_src", "clo_tgt", "str_src", "str_tgt"};

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

// Common-neighbour sums. `per_node` is degree (unweighted) or strength
// (weighted); each common neighbour contributes 1 or min(w_in, w_jn).
struct neighborhood_sums {
  double common{0.0};
  double adamic_adar{0.0};
  double resource_allocation{0.0};
  std::size_t log_skips{0};
};

neighborhood_sums common_neighbors(graph_snapshot const& g, std::size_t i,
                                   std::size_t j, bool weighted) {
  neighborhood_sums s;
  auto const ni = g.neighbors(i);
  auto const nj = g.neighbors(j);
  auto a = begin(ni);
  auto b = begin(nj);
  while (a != end(ni) && b != end(nj)) {
    if (a->node < b->node) {
      ++a;
    } else if (b->node < a->node) {
      ++b;
    } else {
      auto const n = a->node;
      if (n != i && n != j) {
        auto const q = weighted ? static_cast<double>(g.strength(n))
                                : static_cast<double>(g.degree(n));
        s.common += weighted ? static_cast<double>(std::min(a->weight, b->weight))
                             : 1.0;
        if (q > 1.0) {
          s.adamic_adar += 1.0 / std::log(q);
        } else {
          ++s.log_skips;
        }
        s.resource_allocation += ratio(1.0, q);
      }
      ++a;
      ++b;
    }
  }
  return s;
}

// The eleven similarity indices from the common-neighbour sums and the
// per-node quantities (degree or strength) of the endpoints.
std::array<double, 11> similarity_indices(neighborhood_sums const& s, double qi,
                                          double qj, double local_path) {
  auto const c = s.common;
  return {c,
          ratio(c, std::sqrt(qi * qj)),
          ratio(c, qi + qj - c),
          ratio(2.0 * c, qi + qj),
          ratio(c, std::min(qi, qj)),
          ratio(c, std::max(qi, qj)),
          ratio(c, qi * qj),
          qi * qj,
          s.adamic_adar,
          s.resource_allocation,
          local_path};
}

std::vector<double> closeness_all(graph_snapshot const& g) {
  auto const n = g.node_count();
  std::vector<double> out(n, 0.0);
  std::vector<std::int64_t> dist(n);
  std::deque<std::size_t> queue;
  for (std::size_t s = 0; s < n; ++s) {
    std::fill(begin(dist), end(dist), -1);
    dist[s] = 0;
    queue.assign(1, s);
    std::int64_t total = 0;
    while (!queue.empty()) {
      auto const u = queue.front();
      queue.pop_front();
      for (auto const& nb : g.neighbors(u)) {
        if (dist[nb.node] < 0) {
          dist[nb.node] = dist[u] + 1;
          total += dist[nb.node];
          queue.push_back(nb.node);
        }
      }
    }
    out[s] = total > 0 ? 1.0 / static_cast<double>(total) : 0.0;
  }
  return out;
}

}  // namespace

std::string_view to_string(feature_set s) {
  switch (s) {
    case feature_set::tf: return "tf";
    case feature_set::wtf: return "wtf";
    case feature_set::ncm: return "ncm";
  }
  return "?";
}

feature_set parse_feature_set(std::string_view s) {
  auto const v = to_lower(trim(s));
  if (v == "tf") {
    return feature_set::tf;
  }
  if (v == "wtf") {
    return feature_set::wtf;
  }
  if (v == "ncm") {
    return feature_set::ncm;
  }
  throw std::invalid_argument(
      fmt::format("unknown feature set \"{}\" (tf, wtf, ncm)", s));
}

std::vector<feature_set> parse_feature_sets(std::string_view csv) {
  std::vector<feature_set> out;
  for (auto const& part : split(csv, ',')) {
    if (!part.empty()) {
      out.push_back(parse_feature_set(part));
    }
  }
  if (out.empty()) {
    throw std::invalid_argument("no feature sets given");
  }
  return out;
}

std::span<std::string_view const> component_names(feature_set s) {
  switch (s) {
    case feature_set::tf: return tf_names;
    case feature_set::wtf: return wtf_names;
    case feature_set::ncm: return ncm_names;
  }
  return {};
}

std::size_t width(feature_set s) { return component_names(s).size(); }

std::optional<component_ref> find_component(std::string_view name) {
  for (auto const s : {feature_set::tf, feature_set::wtf, feature_set::ncm}) {
    auto const names = component_names(s);
    auto const it = std::find(begin(names), end(names), name);
    if (it != end(names)) {
      return component_ref{s, static_cast<std::size_t>(it - begin(names))};
    }
  }
  return std::nullopt;
}

feature_extractor::feature_extractor(graph_snapshot const& g)
    : feature_extractor(g, g.node_count() > dense_limit) {}

feature_extractor::feature_extractor(graph_snapshot const& g,
                                     bool force_sparse)
    : g_{g}, sparse_{force_sparse} {
  auto const n = static_cast<Eigen::Index>(g.node_count());
  if (sparse_) {
    std::vector<Eigen::Triplet<double>> ta, tw;
    ta.reserve(2 * g.edge_count());
    tw.reserve(2 * g.edge_count());
    for (auto const& e : g.edges()) {
      auto const u = static_cast<Eigen::Index>(e.u);
      auto const v = static_cast<Eigen::Index>(e.v);
      auto const w = static_cast<double>(e.weight);
      ta.emplace_back(u, v, 1.0);
      ta.emplace_back(v, u, 1.0);
      tw.emplace_back(u, v, w);
      tw.emplace_back(v, u, w);
    }
    sa_.resize(n, n);
    sw_.resize(n, n);
    sa_.setFromTriplets(begin(ta), end(ta));
    sw_.setFromTriplets(begin(tw), end(tw));
    sa2_ = sa_ * sa_;
    sw2_ = sw_ * sw_;
  } else {
    a_ = Eigen::MatrixXd::Zero(n, n);
    w_ = Eigen::MatrixXd::Zero(n, n);
    for (auto const& e : g.edges()) {
      auto const u = static_cast<Eigen::Index>(e.u);
      auto const v = static_cast<Eigen::Index>(e.v);
      a_(u, v) = a_(v, u) = 1.0;
      w_(u, v) = w_(v, u) = static_cast<double>(e.weight);
    }
    a2_.noalias() = a_ * a_;
    w2_.noalias() = w_ * w_;
  }
  closeness_ = closeness_all(g);
}

double feature_extractor::walks2(bool weighted, std::size_t i,
                                 std::size_t j) const {
  auto const r = static_cast<Eigen::Index>(i);
  auto const c = static_cast<Eigen::Index>(j);
  if (sparse_) {
    return weighted ? sw2_.coeff(r, c) : sa2_.coeff(r, c);
  }
  return weighted ? w2_(r, c) : a2_(r, c);
}

// (M^3)_ij = sum over neighbours k of j of (M^2)_ik * M_kj.
double feature_extractor::walks3(bool weighted, std::size_t i,
                                 std::size_t j) const {
  double total = 0.0;
  for (auto const& nb : g_.neighbors(j)) {
    auto const m_kj = weighted ? static_cast<double>(nb.weight) : 1.0;
    total += walks2(weighted, i, nb.node) * m_kj;
  }
  return total;
}

tf_values feature_extractor::unweighted(std::size_t i, std::size_t j) const {
  if (i == j || i >= g_.node_count() || j >= g_.node_count()) {
    throw std::invalid_argument("unweighted: bad node pair");
  }
  auto const s = common_neighbors(g_, i, j, false);
  auto const lpi =
      walks2(false, i, j) + local_path_epsilon * walks3(false, i, j);
  return similarity_indices(s, static_cast<double>(g_.degree(i)),
                            static_cast<double>(g_.degree(j)), lpi);
}

wtf_values feature_extractor::weighted(std::size_t i, std::size_t j,
                                       std::size_t* waa_skips) const {
  if (i == j || i >= g_.node_count() || j >= g_.node_count()) {
    throw std::invalid_argument("weighted: bad node pair");
  }
  auto const s = common_neighbors(g_, i, j, true);
  if (waa_skips != nullptr) {
    *waa_skips += s.log_skips;
  }
  auto const lpi = walks2(true, i, j) + local_path_epsilon * walks3(true, i, j);
  return similarity_indices(s, static_cast<double>(g_.strength(i)),
                            static_cast<double>(g_.strength(j)), lpi);
}

ncm_values feature_extractor::centrality(std::size_t i, std::size_t j) const {
  if (i >= g_.node_count() || j >= g_.node_count()) {
    throw std::invalid_argument("centrality: node out of range");
  }
  return {static_cast<double>(g_.degree(i)),
          static_cast<double>(g_.degree(j)),
          closeness_[i],
          closeness_[j],
          static_cast<double>(g_.strength(i)),
          static_cast<double>(g_.strength(j))};
}

std::vector<double> feature_extractor::compute(feature_set s, std::size_t i,
                                               std::size_t j) const {
  switch (s) {
    case feature_set::tf: {
      auto const v = unweighted(i, j);
      return {begin(v), end(v)};
    }
    case feature_set::wtf: {
      auto const v = weighted(i, j);
      return {begin(v), end(v)};
    }
    case feature_set::ncm: {
      auto const v = centrality(i, j);
      return {begin(v), end(v)};
    }
  }
  return {};
}

namespace {

std::pair<std::size_t, std::size_t> endpoints(graph_snapshot const& g,
                                              std::string_view a,
                                              std::string_view b) {
  auto const i = g.index_of(a);
  auto const j = g.index_of(b);
  if (!i || !j) {
    throw std::invalid_argument(fmt::format(
        "{}: node \"{}\" not in snapshot", g.month().str(), !i ? a : b));
  }
  return {*i, *j};
}

}  // namespace

tf_values unweighted_features(graph_snapshot const& g, std::string_view a,
                              std::string_view b) {
  auto const [i, j] = endpoints(g, a, b);
  return feature_extractor{g}.unweighted(i, j);
}

wtf_values weighted_features(graph_snapshot const& g, std::string_view a,
                             std::string_view b) {
  auto const [i, j] = endpoints(g, a, b);
  return feature_extractor{g}.weighted(i, j);
}

ncm_values centrality_features(graph_snapshot const& g, std::string_view a,
                               std::string_view b) {
  auto const [i, j] = endpoints(g, a, b);
  return feature_extractor{g}.centrality(i, j);
}

std::vector<feature_vector> featurize_snapshot(
    graph_snapshot const& g, std::span<monthly_edge_aggregate const> rows,
    std::span<feature_set const> sets) {
  std::vector<feature_vector> out;
  if (rows.empty()) {
    return out;
  }
  feature_extractor const fx{g};
  out.reserve(rows.size() * sets.size());
  for (auto const& r : rows) {
    auto const i = g.index_of(r.source);
    auto const j = g.index_of(r.target);
    if (!i || !j || *i == *j) {
      throw data_error(fmt::format(
          "row {} {} -> {}: endpoint \"{}\" not in the {} snapshot",
          r.month.str(), r.source, r.target, !i ? r.source : r.target,
          g.month().str()));
    }
    for (auto const s : sets) {
      out.push_back({r.month, r.source, r.target, s, fx.compute(s, *i, *j),
                     r.label});
    }
  }
  return out;
}

feature_table featurize(std::span<graph_snapshot const> snapshots,
                        std::span<monthly_edge_aggregate const> rows,
                        std::span<feature_set const> sets) {
  feature_table t;
  for (auto const s : sets) {
    for (auto const name : component_names(s)) {
      t.columns.emplace_back(name);
    }
  }
  std::map<month_key, graph_snapshot const*> by_month;
  for (auto const& g : snapshots) {
    by_month[g.month()] = &g;
  }
  std::map<month_key, std::vector<std::size_t>> rows_by_month;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    rows_by_month[rows[r].month].push_back(r);
  }

  t.rows.resize(rows.size());
  for (auto const& [m, idx] : rows_by_month) {
    auto const it = by_month.find(m);
    if (it == end(by_month)) {
      throw data_error(fmt::format("no snapshot for month {}", m.str()));
    }
    std::vector<monthly_edge_aggregate> month_rows;
    month_rows.reserve(idx.size());
    for (auto const r : idx) {
      month_rows.push_back(rows[r]);
    }
    auto const vectors = featurize_snapshot(*it->second, month_rows, sets);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      auto& row = t.rows[idx[k]];
      auto const& src = rows[idx[k]];
      row.month = src.month;
      row.source = src.source;
      row.target = src.target;
      row.label = src.label;
      for (std::size_t s = 0; s < sets.size(); ++s) {
        auto const& v = vectors[k * sets.size() + s].values;
        row.values.insert(end(row.values), begin(v), end(v));
      }
    }
  }
  return t;
}

void write_feature_table(std::ostream& out, feature_table const& t) {
  std::vector<std::string> header{"month", "source", "target", "label"};
  header.insert(end(header), begin(t.columns), end(t.columns));
  csv::write_row(out, header);
  std::vector<std::string> fields;
  for (auto const& r : t.rows) {
    fields.clear();
    fields.push_back(r.month.str());
    fields.push_back(r.source);
    fields.push_back(r.target);
    fields.push_back(r.label ? (*r.label ? "True" : "False") : "");
    for (auto const v : r.values) {
      fields.push_back(format_double(v));
    }
    csv::write_row(out, fields);
  }
}

feature_table read_feature_table(std::istream& in) {
  csv::line_reader reader{in};
  std::string line;
  if (!reader.next(line)) {
    throw format_error("feature table: missing header row");
  }
  auto const header = csv::split_line(line);
  if (header.size() < 4 || header[0] != "month" || header[1] != "source" ||
      header[2] != "target" || header[3] != "label") {
    throw format_error(
        "feature table: header must start with month,source,target,label");
  }
  feature_table t;
  t.columns.assign(begin(header) + 4, end(header));
  while (reader.next(line)) {
    auto const f = csv::split_line(line);
    if (f.size() != header.size()) {
      throw format_error(fmt::format("feature table line {}: wrong field count",
                                     reader.line_number()));
    }
    feature_table::row r;
    r.month = month_key::parse(f[0]);
    r.source = f[1];
    r.target = f[2];
    auto const l = to_lower(f[3]);
    if (l == "true") {
      r.label = true;
    } else if (l == "false") {
      r.label = false;
    }
    r.values.reserve(t.columns.size());
    for (std::size_t c = 4; c < f.size(); ++c) {
      auto const v = parse_double(f[c]);
      if (!v || !std::isfinite(*v)) {
        throw format_error(fmt::format("feature table line {}: bad value \"{}\"",
                                       reader.line_number(), f[c]));
      }
      r.values.push_back(*v);
    }
    t.rows.push_back(std::move(r));
  }
  return t;
}

}  // namespace delaynet
