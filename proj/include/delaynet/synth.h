#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "delaynet/dataset.h"
#include "delaynet/month.h"
#include "delaynet/snapshot.h"

namespace delaynet {

struct synth_config {
  std::size_t months{24};
  std::size_t nodes{60};
  double edge_probability{0.5};
  std::int64_t weight_min{1};
  std::int64_t weight_max{50};
  std::string signal_feature{"deg_src"};  // any tf/wtf/ncm component name
  double signal_strength{4.0};
  bool stationary{true};  // false: signal sign flips from the midpoint month
  std::uint64_t seed{1};
  month_key start{2019, 1};

  // Throws std::invalid_argument.
  void validate() const;
};

struct synth_corpus {
  std::vector<graph_snapshot> snapshots;
  // One labelled row per edge, source < target by node name.
  std::vector<monthly_edge_aggregate> aggregates;
  // Per aggregate: the signed generating score s * z (after any flip) and
  // the label probability sigmoid of it.
  std::vector<double> scores;
  std::vector<double> probabilities;
};

// Per month an Erdos-Renyi graph with uniform integer weights; each edge's
// label ~ Bernoulli(sigmoid(strength * z)) where z is the within-month
// standardised signal feature.
synth_corpus generate(synth_config const& cfg);

// Balanced accuracy of thresholding the generating score at 0.
double bayes_balanced_accuracy(synth_corpus const& c);

// Gaussian table with label = [x_signal > 0], each label flipped with
// probability `noise`. Rows are spread evenly across `months`.
labeled_dataset planted_signal_table(std::size_t rows, std::size_t width,
                                     std::size_t signal_column, double noise,
                                     std::uint64_t seed,
                                     std::size_t months = 1);

// Reference computation of all 28 components (11 TF, 11 WTF, 6 NCM) for
// the pair (i, j) of a small graph (<= 12 nodes) by direct enumeration:
// explicit neighbour sets, nested loops over walks of length 2 and 3, and
// BFS distances.
using oracle_values = std::array<double, 28>;
oracle_values oracle_features(graph_snapshot const& g, std::size_t i,
                              std::size_t j);

}  // namespace delaynet
