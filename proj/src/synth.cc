#include "delaynet/synth.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iterator>
#include <random>
#include <set>
#include <stdexcept>

#include <fmt/core.h>

#include "delaynet/common.h"
#include "delaynet/features.h"
#include "delaynet/metrics.h"
#include "delaynet/models.h"

namespace delaynet {

void synth_config::validate() const {
  if (!(edge_probability > 0.0 && edge_probability <= 1.0)) {
    throw std::invalid_argument("synth: edge_probability must lie in (0, 1]");
  }
  if (nodes < 4) {
    throw std::invalid_argument("synth: nodes must be >= 4");
  }
  if (months == 0) {
    throw std::invalid_argument("synth: months must be >= 1");
  }
  if (weight_min < 1 || weight_max < weight_min) {
    throw std::invalid_argument("synth: weight range must satisfy 1 <= min <= max");
  }
  if (!(signal_strength >= 0.0) || !std::isfinite(signal_strength)) {
    throw std::invalid_argument("synth: signal_strength must be >= 0");
  }
  if (!find_component(signal_feature)) {
    throw std::invalid_argument(
        fmt::format("synth: unknown signal feature \"{}\"", signal_feature));
  }
}

synth_corpus generate(synth_config const& cfg) {
  cfg.validate();
  auto const component = *find_component(cfg.signal_feature);
  auto const digits = std::max<std::size_t>(
      2, std::to_string(cfg.nodes - 1).size());
  std::vector<std::string> names;
  for (std::size_t i = 0; i < cfg.nodes; ++i) {
    names.push_back(fmt::format("n{:0{}}", i, digits));
  }

  synth_corpus c;
  auto month = cfg.start;
  for (std::size_t t = 0; t < cfg.months; ++t, month = month.successor()) {
    std::mt19937_64 graph_rng{derive_seed(cfg.seed, 2 * t)};
    std::mt19937_64 label_rng{derive_seed(cfg.seed, 2 * t + 1)};
    std::bernoulli_distribution edge{cfg.edge_probability};
    std::uniform_int_distribution<std::int64_t> weight{cfg.weight_min,
                                                       cfg.weight_max};

    std::vector<monthly_edge_aggregate> rows;
    for (std::size_t u = 0; u < cfg.nodes; ++u) {
      for (std::size_t v = u + 1; v < cfg.nodes; ++v) {
        if (!edge(graph_rng)) {
          continue;
        }
        monthly_edge_aggregate a;
        a.month = month;
        a.source = names[u];
        a.target = names[v];
        a.rides_planned = weight(graph_rng);
        rows.push_back(std::move(a));
      }
    }
    if (rows.empty()) {
      continue;
    }
    auto g = build_graph(rows);
    feature_extractor const fx{g};

    std::vector<double> x(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      auto const i = *g.index_of(rows[r].source);
      auto const j = *g.index_of(rows[r].target);
      x[r] = fx.compute(component.set, i, j)[component.index];
    }
    double mean = 0.0;
    for (auto const v : x) {
      mean += v;
    }
    mean /= static_cast<double>(x.size());
    double var = 0.0;
    for (auto const v : x) {
      var += (v - mean) * (v - mean);
    }
    auto const sd = std::sqrt(var / static_cast<double>(x.size()));

    auto const flipped = !cfg.stationary && t >= cfg.months / 2;
    auto const sign = flipped ? -1.0 : 1.0;
    std::uniform_real_distribution<double> unit{0.0, 1.0};
    for (std::size_t r = 0; r < rows.size(); ++r) {
      auto const z = sd > 0.0 ? (x[r] - mean) / sd : 0.0;
      auto const score = sign * cfg.signal_strength * z;
      auto const p = sigmoid(score);
      auto const label = unit(label_rng) < p;
      auto& a = rows[r];
      a.final_arrival_delay_count = label ? a.rides_planned : 0;
      a.proportion_delayed = proportion_delayed(
          a.rides_planned, a.final_arrival_delay_count, 0);
      a.label = label;
      c.scores.push_back(score);
      c.probabilities.push_back(p);
    }
    c.aggregates.insert(end(c.aggregates), std::make_move_iterator(begin(rows)),
                        std::make_move_iterator(end(rows)));
    c.snapshots.push_back(std::move(g));
  }
  return c;
}

double bayes_balanced_accuracy(synth_corpus const& c) {
  confusion_matrix cm;
  for (std::size_t r = 0; r < c.aggregates.size(); ++r) {
    cm.add(c.aggregates[r].label.value_or(false), c.scores[r] > 0.0);
  }
  return balanced_accuracy(cm);
}

labeled_dataset planted_signal_table(std::size_t rows, std::size_t width,
                                     std::size_t signal_column, double noise,
                                     std::uint64_t seed, std::size_t months) {
  if (signal_column >= width) {
    throw std::invalid_argument("planted table: signal column out of range");
  }
  if (months == 0) {
    throw std::invalid_argument("planted table: months must be >= 1");
  }
  std::vector<std::string> names;
  for (std::size_t f = 0; f < width; ++f) {
    names.push_back(fmt::format("f{}", f));
  }
  labeled_dataset ds{names};
  std::mt19937_64 rng{seed};
  std::normal_distribution<double> gauss{0.0, 1.0};
  std::bernoulli_distribution flip{noise};
  std::vector<month_key> keys{month_key{2019, 1}};
  while (keys.size() < months) {
    keys.push_back(keys.back().successor());
  }
  std::vector<double> x(width);
  for (std::size_t r = 0; r < rows; ++r) {
    for (auto& v : x) {
      v = gauss(rng);
    }
    auto label = x[signal_column] > 0.0;
    if (flip(rng)) {
      label = !label;
    }
    ds.add_row(keys[r * months / rows], x, label);
  }
  return ds;
}

oracle_values oracle_features(graph_snapshot const& g, std::size_t i,
                              std::size_t j) {
  auto const n = g.node_count();
  if (n > 12) {
    throw std::invalid_argument("oracle: graph must have <= 12 nodes");
  }
  if (i >= n || j >= n || i == j) {
    throw std::invalid_argument("oracle: bad node pair");
  }

  // Adjacency and weight tables.
  std::vector<std::vector<double>> A(n, std::vector<double>(n, 0.0));
  std::vector<std::vector<double>> W = A;
  for (auto const& e : g.edges()) {
    A[e.u][e.v] = A[e.v][e.u] = 1.0;
    W[e.u][e.v] = W[e.v][e.u] = static_cast<double>(e.weight);
  }
  std::vector<std::set<std::size_t>> gamma(n);
  std::vector<double> k(n, 0.0), s(n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (A[a][b] != 0.0) {
        gamma[a].insert(b);
        k[a] += 1.0;
        s[a] += W[a][b];
      }
    }
  }

  std::vector<std::size_t> common, either;
  std::set_intersection(begin(gamma[i]), end(gamma[i]), begin(gamma[j]),
                        end(gamma[j]), std::back_inserter(common));
  std::set_union(begin(gamma[i]), end(gamma[i]), begin(gamma[j]),
                 end(gamma[j]), std::back_inserter(either));
  common.erase(std::remove_if(begin(common), end(common),
                              [&](auto z) { return z == i || z == j; }),
               end(common));

  auto const safe = [](double num, double den) {
    return den == 0.0 ? 0.0 : num / den;
  };

  auto const walks = [&](std::vector<std::vector<double>> const& M, int len) {
    double total = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      if (len == 2) {
        total += M[i][a] * M[a][j];
        continue;
      }
      for (std::size_t b = 0; b < n; ++b) {
        total += M[i][a] * M[a][b] * M[b][j];
      }
    }
    return total;
  };

  oracle_values out{};
  // Unweighted.
  auto const cn = static_cast<double>(common.size());
  double aa = 0.0, ra = 0.0;
  for (auto const z : common) {
    aa += 1.0 / std::log(k[z]);
    ra += 1.0 / k[z];
  }
  out[0] = cn;
  out[1] = safe(cn, std::sqrt(k[i] * k[j]));
  out[2] = safe(cn, static_cast<double>(either.size()));
  out[3] = safe(2.0 * cn, k[i] + k[j]);
  out[4] = safe(cn, std::min(k[i], k[j]));
  out[5] = safe(cn, std::max(k[i], k[j]));
  out[6] = safe(cn, k[i] * k[j]);
  out[7] = k[i] * k[j];
  out[8] = aa;
  out[9] = ra;
  out[10] = walks(A, 2) + 0.01 * walks(A, 3);

  // Weighted.
  double wcn = 0.0, waa = 0.0, wra = 0.0;
  for (auto const z : common) {
    wcn += std::min(W[i][z], W[j][z]);
    if (s[z] > 1.0) {
      waa += 1.0 / std::log(s[z]);
    }
    wra += safe(1.0, s[z]);
  }
  out[11] = wcn;
  out[12] = safe(wcn, std::sqrt(s[i] * s[j]));
  out[13] = safe(wcn, s[i] + s[j] - wcn);
  out[14] = safe(2.0 * wcn, s[i] + s[j]);
  out[15] = safe(wcn, std::min(s[i], s[j]));
  out[16] = safe(wcn, std::max(s[i], s[j]));
  out[17] = safe(wcn, s[i] * s[j]);
  out[18] = s[i] * s[j];
  out[19] = waa;
  out[20] = wra;
  out[21] = walks(W, 2) + 0.01 * walks(W, 3);

  // Centrality via BFS hop distances.
  auto const closeness = [&](std::size_t src) {
    std::vector<int> dist(n, -1);
    std::deque<std::size_t> q{src};
    dist[src] = 0;
    double total = 0.0;
    while (!q.empty()) {
      auto const u = q.front();
      q.pop_front();
      for (std::size_t v = 0; v < n; ++v) {
        if (A[u][v] != 0.0 && dist[v] < 0) {
          dist[v] = dist[u] + 1;
          total += dist[v];
          q.push_back(v);
        }
      }
    }
    return safe(1.0, total);
  };
  out[22] = k[i];
  out[23] = k[j];
  out[24] = closeness(i);
  out[25] = closeness(j);
  out[26] = s[i];
  out[27] = s[j];
  return out;
}

}  // namespace delaynet
