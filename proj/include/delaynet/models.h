#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "delaynet/dataset.h"
#include "delaynet/tree.h"

namespace delaynet {

enum class algorithm {
  logistic,
  decision_tree,
  random_forest,
  gradient_boosting,
  adaboost,
  xgboost  // gradient_boosting preloaded with the baseline booster settings
};

std::string_view to_string(algorithm a);
algorithm parse_algorithm(std::string_view s);
std::span<algorithm const> all_algorithms();

// None | bool | int | real | string
using hyper_value =
    std::variant<std::monostate, bool, std::int64_t, double, std::string>;
using hyperparameters = std::map<std::string, hyper_value>;

std::string to_string(hyper_value const& v);
// "None", "True"/"False", integers, reals, otherwise a string.
hyper_value parse_hyper_value(std::string_view s);
// "k=v;k=v", keys in map order.
std::string to_string(hyperparameters const& h);

struct model_spec {
  algorithm algo{algorithm::logistic};
  hyperparameters params;
  std::uint64_t seed{0};
};

hyperparameters default_hyperparameters(algorithm a);

// Merges `overrides` over the defaults and validates names and values.
// Throws std::invalid_argument naming the offending parameter.
model_spec make_spec(algorithm a, hyperparameters const& overrides = {},
                     std::uint64_t seed = 0);
void validate(model_spec const& spec);

// Fitted parameter containers.

struct logistic_model {
  std::vector<double> mean;   // per-feature centring
  std::vector<double> scale;  // per-feature scaling (1 for constant columns)
  std::vector<double> coef;   // on the standardised scale
  double intercept{0.0};
};

struct tree_model {
  decision_tree tree;
};

struct forest_model {
  std::vector<decision_tree> trees;
};

struct boosted_model {
  double base_margin{0.0};
  double learning_rate{0.1};
  std::vector<decision_tree> trees;
};

struct adaboost_model {
  std::vector<decision_tree> stumps;
  std::vector<double> alphas;
};

struct training_info {
  std::size_t iterations{0};
  std::vector<double> loss_trace;
  std::vector<std::string> warnings;
};

class trained_model {
public:
  using parameters = std::variant<logistic_model, tree_model, forest_model,
                                  boosted_model, adaboost_model>;

  trained_model(model_spec spec, std::size_t width, parameters p,
                training_info info = {});

  model_spec const& spec() const { return spec_; }
  std::size_t width() const { return width_; }
  training_info const& info() const { return info_; }
  parameters const& params() const { return params_; }

  template <typename T>
  T const* as() const {
    return std::get_if<T>(&params_);
  }

  // Finite probability of the positive class. Throws std::invalid_argument
  // on a width mismatch.
  double predict_proba(std::span<double const> x) const;
  std::vector<double> predict_proba(labeled_dataset const& ds) const;
  bool predict(std::span<double const> x) const {
    return predict_proba(x) >= 0.5;
  }

  void save(std::ostream& out) const;
  static trained_model load(std::istream& in);

private:
  model_spec spec_;
  std::size_t width_;
  parameters params_;
  training_info info_;
};

// Throws data_error on a single-class or non-finite training set.
trained_model train(model_spec const& spec, labeled_dataset const& data);

// Mean logistic loss plus l2/2 * |coef|^2 on raw features, with the
// intercept stored last in `params` (size width + 1). Fills `grad` when
// non-null.
double logistic_objective(labeled_dataset const& data,
                          std::span<double const> params, double l2,
                          std::vector<double>* grad = nullptr);

inline double sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z))
                : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace delaynet
