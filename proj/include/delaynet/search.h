#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "delaynet/dataset.h"
#include "delaynet/models.h"

namespace delaynet {

// Ordered parameter -> candidate values.
using search_grid = std::vector<std::pair<std::string, std::vector<hyper_value>>>;

// Classifier-comparison grids (GradientBoosting, AdaBoost,
// LogisticRegression, RandomForest, DecisionTree). xgboost has none.
search_grid default_grid(algorithm a);

std::size_t grid_size(search_grid const& g);
// Mixed-radix decoding of a configuration index.
hyperparameters grid_config(search_grid const& g, std::size_t index);

struct search_row {
  hyperparameters config;
  std::vector<std::optional<double>> fold_ba;  // nullopt: fold skipped
  double mean_ba{0.0};
};

struct search_result {
  model_spec best;
  std::size_t best_index{0};
  std::vector<search_row> table;
  std::vector<std::string> warnings;
};

// Samples n_iter distinct configurations uniformly from the grid (all of
// them when n_iter >= grid size) and scores each by stratified k-fold mean
// balanced accuracy. The first configuration with the highest mean wins.
search_result randomized_search_cv(algorithm a, search_grid const& grid,
                                   labeled_dataset const& data,
                                   std::size_t n_iter = 25, std::size_t k = 10,
                                   std::uint64_t seed = 0,
                                   hyperparameters const& fixed = {});

// config, fold_1..fold_k, mean_ba
void write_search_report(std::ostream& out, search_result const& r);

}  // namespace delaynet
