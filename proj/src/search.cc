#include "delaynet/search.h"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include <fmt/core.h>

#include "delaynet/common.h"
#include "delaynet/csv.h"
#include "delaynet/metrics.h"

namespace delaynet {

namespace {

std::vector<hyper_value> ints(std::initializer_list<std::int64_t> v) {
  return {begin(v), end(v)};
}

std::vector<hyper_value> reals(std::initializer_list<double> v) {
  return {begin(v), end(v)};
}

std::vector<hyper_value> strs(std::initializer_list<char const*> v) {
  std::vector<hyper_value> out;
  for (auto const* s : v) {
    out.emplace_back(std::string{s});
  }
  return out;
}

std::vector<hyper_value> depths() {
  return {std::int64_t{10}, std::int64_t{20}, std::int64_t{30},
          std::monostate{}};
}

}  // namespace

search_grid default_grid(algorithm a) {
  switch (a) {
    case algorithm::gradient_boosting:
      return {{"n_estimators", ints({50, 100, 200, 300})},
              {"learning_rate", reals({0.01, 0.05, 0.1, 0.2})},
              {"max_depth", ints({3, 5, 7, 9})},
              {"min_samples_split", ints({2, 5, 10})},
              {"min_samples_leaf", ints({1, 2, 4})},
              {"max_features", strs({"sqrt", "log2"})}};
    case algorithm::adaboost:
      return {{"n_estimators", ints({50, 100, 200, 400})},
              {"learning_rate", reals({0.01, 0.1, 0.5, 1.0})}};
    case algorithm::logistic:
      return {{"C", reals({0.001, 0.01, 0.1, 1.0, 10.0, 100.0})},
              {"penalty", strs({"l1", "l2", "elasticnet"})},
              {"solver", strs({"liblinear", "saga"})}};
    case algorithm::random_forest:
      return {{"n_estimators", ints({100, 200, 500, 1000})},
              {"max_features", strs({"auto", "sqrt", "log2"})},
              {"max_depth", depths()},
              {"min_samples_split", ints({2, 5, 10})},
              {"min_samples_leaf", ints({1, 2, 4})},
              {"bootstrap", {true, false}}};
    case algorithm::decision_tree:
      return {{"max_features", strs({"auto", "sqrt", "log2"})},
              {"max_depth", depths()},
              {"min_samples_split", ints({2, 5, 10})},
              {"min_samples_leaf", ints({1, 2, 4})},
              {"criterion", strs({"gini", "entropy"})}};
    case algorithm::xgboost: return {};
  }
  return {};
}

std::size_t grid_size(search_grid const& g) {
  std::size_t n = 1;
  for (auto const& [name, values] : g) {
    n *= values.size();
  }
  return n;
}

hyperparameters grid_config(search_grid const& g, std::size_t index) {
  if (index >= grid_size(g)) {
    throw std::out_of_range("grid configuration index out of range");
  }
  hyperparameters h;
  for (auto it = g.rbegin(); it != g.rend(); ++it) {
    auto const& [name, values] = *it;
    h[name] = values[index % values.size()];
    index /= values.size();
  }
  return h;
}

search_result randomized_search_cv(algorithm a, search_grid const& grid,
                                   labeled_dataset const& data,
                                   std::size_t n_iter, std::size_t k,
                                   std::uint64_t seed,
                                   hyperparameters const& fixed) {
  auto const size = grid_size(grid);
  if (size == 0 || n_iter == 0) {
    throw std::invalid_argument("search: no configuration to evaluate");
  }
  if (data.size() < k) {
    throw std::invalid_argument(fmt::format(
        "search: {} rows cannot fill {} folds", data.size(), k));
  }

  std::vector<std::size_t> picks;
  if (n_iter >= size) {
    picks.resize(size);
    std::iota(begin(picks), end(picks), std::size_t{0});
  } else {
    std::mt19937_64 rng{derive_seed(seed, 0)};
    std::uniform_int_distribution<std::size_t> draw{0, size - 1};
    std::set<std::size_t> seen;
    while (picks.size() < n_iter) {
      auto const i = draw(rng);
      if (seen.insert(i).second) {
        picks.push_back(i);
      }
    }
  }

  auto const folds = stratified_kfold(data.labels(), k, derive_seed(seed, 1));
  search_result result;
  std::vector<std::vector<std::size_t>> train_rows(k), test_rows(k);
  std::vector<bool> usable(k, true);
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t f = 0; f < k; ++f) {
      (folds[i] == f ? test_rows : train_rows)[f].push_back(i);
    }
  }
  std::vector<labeled_dataset> train_sets, test_sets;
  for (std::size_t f = 0; f < k; ++f) {
    train_sets.push_back(data.subset(train_rows[f]));
    test_sets.push_back(data.subset(test_rows[f]));
    auto const single = [](labeled_dataset const& d) {
      return d.positives() == 0 || d.positives() == d.size();
    };
    if (single(train_sets[f]) || single(test_sets[f])) {
      usable[f] = false;
      result.warnings.push_back(
          fmt::format("fold {} skipped: single-class side", f + 1));
    }
  }
  if (std::none_of(begin(usable), end(usable), [](bool b) { return b; })) {
    throw data_error("search: every fold holds a single class");
  }

  auto const model_seed = derive_seed(seed, 2);
  double best_mean = -1.0;
  for (auto const index : picks) {
    auto config = grid_config(grid, index);
    auto params = fixed;
    for (auto const& [key, v] : config) {
      params[key] = v;
    }
    auto const spec = make_spec(a, params, model_seed);
    search_row row;
    row.config = std::move(config);
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t f = 0; f < k; ++f) {
      if (!usable[f]) {
        row.fold_ba.emplace_back();
        continue;
      }
      auto const model = train(spec, train_sets[f]);
      confusion_matrix cm;
      for (std::size_t i = 0; i < test_sets[f].size(); ++i) {
        cm.add(test_sets[f].label(i), model.predict(test_sets[f].row(i)));
      }
      auto const ba = balanced_accuracy(cm);
      row.fold_ba.emplace_back(ba);
      sum += ba;
      ++used;
    }
    row.mean_ba = sum / static_cast<double>(used);
    if (row.mean_ba > best_mean) {
      best_mean = row.mean_ba;
      result.best = spec;
      result.best_index = result.table.size();
    }
    result.table.push_back(std::move(row));
  }
  return result;
}

void write_search_report(std::ostream& out, search_result const& r) {
  auto const k = r.table.empty() ? 0 : r.table.front().fold_ba.size();
  std::vector<std::string> header{"config"};
  for (std::size_t f = 0; f < k; ++f) {
    header.push_back(fmt::format("fold_{}", f + 1));
  }
  header.emplace_back("mean_ba");
  csv::write_row(out, header);
  for (auto const& row : r.table) {
    std::vector<std::string> fields{to_string(row.config)};
    for (auto const& ba : row.fold_ba) {
      fields.push_back(ba ? format_double(*ba) : "");
    }
    fields.push_back(format_double(row.mean_ba));
    csv::write_row(out, fields);
  }
}

}  // namespace delaynet
